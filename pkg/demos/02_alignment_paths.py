"""Alignment paths as first-class objects.

A path through the TxT grid *is* a way of pairing up time points.  The attack
machinery samples them at random inside a Sakoe-Chiba band, measures how far
apart two paths are, and uses a fixed path's cost as a cheap upper bound on
the exact DTW.
"""

import numpy as np

from dtwadv.dtw import dist_p, dtw
from dtwadv.paths import (
    AdmissibleBand,
    AlignmentPath,
    diagonal_path,
    enumerate_paths,
    path_sim,
    random_admissible_path,
)

# how many admissible paths are there?  (Delannoy growth: brutal.)
print("number of admissible alignments of two length-T series:")
for T in range(1, 8):
    print(f"  T={T}: {len(enumerate_paths(T)):6d}")

# random draws inside a band
band = AdmissibleBand(0.3)
print(f"\nthree random paths for T=10, band width {band.width(10)}:")
for seed in range(3):
    p = random_admissible_path(10, band, seed=seed)
    print(f"  seed {seed}: {p.to_text()}")

# path similarity: average row-wise column gap, 0 iff identical
a = diagonal_path(10)
b = random_admissible_path(10, band, seed=0)
c = random_admissible_path(10, band, seed=1)
print("\npath_sim (0 = identical):")
print(f"  sim(diag, diag) = {path_sim(a, a):.4f}")
print(f"  sim(diag, b)    = {path_sim(a, b):.4f}")
print(f"  sim(b, c)       = {path_sim(b, c):.4f}")
print(f"  sim(c, b)       = {path_sim(c, b):.4f}  (symmetric)")

# a path serializes to text and back -- handy for CSV result files
text = b.to_text()
assert AlignmentPath.from_text(text) == b
print(f"\nround-trip through text works: {text[:34]}...")

# cost along ANY fixed path bounds the exact DTW from above
rng = np.random.default_rng(0)
X, Z = rng.standard_normal((2, 1, 10))
exact = dtw(X, Z).value
print(f"\nexact DTW {exact:.4f} vs cost along fixed paths:")
for seed in range(4):
    p = random_admissible_path(10, band, seed=seed)
    print(f"  dist_P (seed {seed}) = {dist_p(X, Z, p):.4f}  (>= exact, always)")
