"""Geometry and performance diagnostics: pairwise distance matrices,
classical MDS embeddings, runtime benchmarks, and alignment-path convergence
traces for recorded attacks."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .attack import AdversarialResult
from .dtw import SQUARED_L2, PointMetric, dist_p, dtw, soft_dtw
from .paths import DEFAULT_BAND, AlignmentPath, diagonal_path, path_sim, random_admissible_path
from .signal import LabeledDataset

__all__ = [
    "DistanceMatrix",
    "distance_matrix",
    "MdsResult",
    "mds_embed",
    "mds_silhouette",
    "BenchRecord",
    "runtime_bench",
    "pathsim_trace",
]

MEASURES = ("dtw", "l2", "dist_P")


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distances with the measure that produced them."""

    values: np.ndarray
    measure: str
    metric: PointMetric

    def __post_init__(self):
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        self.values.setflags(write=False)

    @property
    def size(self) -> int:
        return self.values.shape[0]


def distance_matrix(
    ds: LabeledDataset,
    measure: str = "dtw",
    metric: PointMetric = SQUARED_L2,
    path: AlignmentPath | None = None,
) -> DistanceMatrix:
    """All-pairs distances over a dataset.

    measure: "dtw" (exact), "l2" (diagonal path; squared Euclidean under the
    default metric), or "dist_P" (a caller-supplied fixed path applied to
    every pair).
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    m, _, T = ds.X.shape
    if measure == "dist_P":
        if path is None:
            raise ValueError("measure 'dist_P' requires an explicit path")
    else:
        path = diagonal_path(T)
    M = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            if measure == "dtw":
                d = dtw(ds.X[a], ds.X[b], metric).value
            else:
                d = dist_p(ds.X[a], ds.X[b], path, metric)
            M[a, b] = M[b, a] = d
    return DistanceMatrix(M, measure, metric)


@dataclass(frozen=True)
class MdsResult:
    coords: np.ndarray        # (m, dims)
    eigenvalues: np.ndarray   # all m, descending
    n_clamped: int            # negative eigenvalues among the kept dims

    def __post_init__(self):
        self.coords.setflags(write=False)
        self.eigenvalues.setflags(write=False)


def mds_embed(D, dims: int = 2, squared: bool | None = None) -> MdsResult:
    """Classical (Torgerson) multidimensional scaling.

    Double-centers -(1/2) D^2, takes the top eigenpairs of the resulting
    Gram matrix, and scales eigenvectors by sqrt(eigenvalue).  Negative
    eigenvalues among the kept dimensions (non-Euclidean input, e.g. DTW)
    are clamped to zero and counted in ``n_clamped``.  Sign convention: each
    coordinate column has its largest-magnitude entry positive, so the
    embedding is deterministic.

    ``squared`` says whether the matrix entries are already squared
    distances; by default a DistanceMatrix built on the squared-Euclidean
    point metric is treated as squared, anything else as plain distances.
    """
    if isinstance(D, DistanceMatrix):
        V = D.values
        if squared is None:
            squared = D.metric.kind == "sqeuclidean"
    else:
        V = np.asarray(D, dtype=np.float64)
        if squared is None:
            squared = False
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError(f"distance matrix must be square, got {V.shape}")
    m = V.shape[0]
    if m < dims + 1:
        raise ValueError(f"need at least {dims + 1} points for a {dims}-d embedding, got {m}")
    if np.abs(V - V.T).max() > 1e-12:
        raise ValueError("distance matrix is not symmetric")
    D2 = V if squared else V * V
    J = np.eye(m) - np.full((m, m), 1.0 / m)
    B = -0.5 * (J @ D2 @ J)
    w, U = np.linalg.eigh(B)
    order = np.argsort(w)[::-1]
    w = w[order]
    U = U[:, order]
    kept = w[:dims]
    n_clamped = int(np.sum(kept < 0))
    coords = U[:, :dims] * np.sqrt(np.clip(kept, 0.0, None))
    for c in range(dims):
        col = coords[:, c]
        if col[np.argmax(np.abs(col))] < 0:
            coords[:, c] = -col
    return MdsResult(coords, w, n_clamped)


def mds_silhouette(D, labels: Sequence[int], dims: int = 2) -> tuple:
    """Embed and score class separation; returns (MdsResult, silhouette)."""
    from sklearn.metrics import silhouette_score

    res = mds_embed(D, dims)
    return res, float(silhouette_score(res.coords, np.asarray(labels)))


@dataclass(frozen=True)
class BenchRecord:
    method: str
    T: int
    n: int
    mean_s: float
    std_s: float
    reps: int


def runtime_bench(
    T_list: Sequence[int], n: int = 3, reps: int = 10, seed: int = 0
) -> list:
    """Wall-clock timing of exact DTW, soft-DTW, and fixed-path distance.

    One untimed warmup call per method precedes measurement (this also
    absorbs JIT compilation).  Inputs are seeded, so a repeated run times
    the identical signals.  All timed kernels are single-threaded.
    """
    if reps < 10:
        raise ValueError("need at least 10 repetitions for a stable estimate")
    records = []
    for T in T_list:
        if T < 2:
            raise ValueError("benchmark lengths must be >= 2")
        rng = np.random.default_rng(seed + T)
        X = rng.standard_normal((n, T))
        Z = rng.standard_normal((n, T))
        path = random_admissible_path(T, DEFAULT_BAND, seed + T)
        methods = {
            "exact-dtw": lambda: dtw(X, Z),
            "soft-dtw": lambda: soft_dtw(X, Z, 1.0),
            "dist_P": lambda: dist_p(X, Z, path),
        }
        for name, fn in methods.items():
            fn()  # warmup, excluded
            times = np.empty(reps)
            for i in range(reps):
                t0 = time.perf_counter()
                fn()
                times[i] = time.perf_counter() - t0
            records.append(
                BenchRecord(name, T, n, float(times.mean()), float(times.std()), reps)
            )
    return records


def pathsim_trace(result: AdversarialResult, X: np.ndarray) -> list:
    """Alignment drift of a recorded attack: for every stored snapshot,
    similarity between the attack's target path and the optimal DTW path
    from the clean input to that iterate.  Returns [(iteration, sim)].
    """
    if result.path is None:
        raise ValueError("result has no target path (label-only attack?)")
    if not result.snapshots:
        raise ValueError(
            "result has no snapshots; rerun the attack with AttackConfig.snapshot_every > 0"
        )
    out = []
    for it, snap in result.snapshots:
        opt = dtw(X, snap, result.config.metric).path
        out.append((it, path_sim(result.path, opt)))
    return out
