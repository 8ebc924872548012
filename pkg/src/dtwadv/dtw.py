"""Exact DTW, fixed-path distances, soft-DTW, variants, brute-force oracle.

All measures work on equal-length series (square T x T cost matrices) in
float64.  The frame metric is pluggable via :class:`PointMetric`; the default
squared-l2 makes the diagonal-path distance literally the squared Euclidean
distance, so every DTW-vs-Euclidean statement in this package is exact rather
than analogical.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _kernels
from .paths import AlignmentPath, diagonal_path, enumerate_paths, validate
from .signal import as_series

__all__ = [
    "PointMetric",
    "SQUARED_L2",
    "L1",
    "lp_metric",
    "CostMatrix",
    "DtwResult",
    "SoftDtwResult",
    "pointwise_distance",
    "cost_matrix",
    "write_cost_csv",
    "dtw",
    "dist_p",
    "dist_p_gradient",
    "soft_dtw",
    "dtw_variant",
    "brute_force_dtw",
]

_KINDS = ("sqeuclidean", "l1", "lp")


@dataclass(frozen=True)
class PointMetric:
    """Frame-to-frame distance between n-vectors.

    ``sqeuclidean``: sum of squared differences (the default everywhere);
    ``l1``: sum of absolute differences; ``lp``: sum of |.|**p.  All variants
    are symmetric, nonnegative, and zero on identical frames.  ``l1`` and
    ``sqeuclidean`` are the p=1 and p=2 members of the ``lp`` family.
    """

    kind: str = "sqeuclidean"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; choose from {_KINDS}")
        if self.kind == "lp":
            if self.p is None or self.p <= 0:
                raise ValueError("lp metric requires p > 0")
        elif self.p is not None:
            raise ValueError(f"metric {self.kind!r} takes no p parameter")

    # --- elementwise pieces -------------------------------------------------

    def _power(self, absdiff: np.ndarray) -> np.ndarray:
        if self.kind == "sqeuclidean":
            return absdiff * absdiff
        if self.kind == "l1":
            return absdiff
        return absdiff ** self.p

    def elementwise_gradient(self, diff: np.ndarray) -> np.ndarray:
        """Derivative of each summand with respect to the second argument,
        where ``diff = z - x``.  (ReLU-style convention: sign(0) = 0.)"""
        if self.kind == "sqeuclidean":
            return 2.0 * diff
        if self.kind == "l1":
            return np.sign(diff)
        return self.p * np.abs(diff) ** (self.p - 1.0) * np.sign(diff)

    # --- aggregate forms ----------------------------------------------------

    def between(self, a, b) -> float:
        """Distance between two n-vectors."""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
        return float(self._power(np.abs(a - b)).sum())

    def pairwise(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """All frame distances d(X_i, Z_j) as a (T, T) grid."""
        diff = np.abs(X[:, :, None] - Z[:, None, :])
        return self._power(diff).sum(axis=0)

    def along_cells(self, X, Z, rows0, cols0) -> np.ndarray:
        """Frame distances for the cells (rows0[k], cols0[k]), 0-based."""
        diff = np.abs(X[:, rows0] - Z[:, cols0])
        return self._power(diff).sum(axis=0)


SQUARED_L2 = PointMetric("sqeuclidean")
L1 = PointMetric("l1")


def lp_metric(p: float) -> PointMetric:
    return PointMetric("lp", float(p))


def pointwise_distance(a, b, m: PointMetric = SQUARED_L2) -> float:
    """Frame distance d(a, b) between two n-vectors under metric ``m``."""
    return m.between(a, b)


def _check_pair(X, Z):
    X = as_series(X)
    Z = as_series(Z)
    if X.shape != Z.shape:
        raise ValueError(f"series shapes differ: {X.shape} vs {Z.shape}")
    return X, Z


@dataclass(frozen=True)
class CostMatrix:
    """Accumulated-cost grid with references to the series that built it."""

    values: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    metric: PointMetric

    def __post_init__(self):
        v = np.ascontiguousarray(self.values)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return self.values.shape[0]


class DtwResult(NamedTuple):
    value: float
    path: AlignmentPath


class SoftDtwResult(NamedTuple):
    value: float
    gradient: np.ndarray  # d value / d Z, shape (n, T)


def cost_matrix(X, Z, m: PointMetric = SQUARED_L2) -> CostMatrix:
    """Accumulated DTW cost grid.

    ``C[i, j] = d(X_i, Z_j) + min`` of the defined predecessors
    ``{C[i-1, j], C[i, j-1], C[i-1, j-1]}``; the first row and column simply
    accumulate.  Runtime Theta(n T^2).
    """
    X, Z = _check_pair(X, Z)
    C = _kernels.accumulate(m.pairwise(X, Z))
    return CostMatrix(C, X, Z, m)


def write_cost_csv(cm: CostMatrix, path) -> None:
    """Dump a cost matrix row-major (T rows) for debugging."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in cm.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def dtw(X, Z, m: PointMetric = SQUARED_L2) -> DtwResult:
    """DTW value and one optimal alignment path.

    The value is ``C[T, T]``; the path is recovered by backtracking with the
    fixed tie-break order diagonal > left > up (prefer ``(i-1, j-1)``, then
    ``(i, j-1)``, then ``(i-1, j)``), so results are deterministic.  The
    returned path's ``dist_p`` reproduces the value bitwise.
    """
    cm = cost_matrix(X, Z, m)
    C = cm.values
    T = cm.T
    i = j = T - 1
    cells = [(T, T)]
    while i or j:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, left, up = C[i - 1, j - 1], C[i, j - 1], C[i - 1, j]
            best = min(diag, left, up)
            if diag == best:
                i -= 1
                j -= 1
            elif left == best:
                j -= 1
            else:
                i -= 1
        cells.append((i + 1, j + 1))
    cells.reverse()
    return DtwResult(float(C[T - 1, T - 1]), AlignmentPath(tuple(cells), T))


def dist_p(X, Z, P: AlignmentPath, m: PointMetric = SQUARED_L2) -> float:
    """Accumulated frame distance along one fixed path.

    ``sum over (i, j) in P of d(X_i, Z_j)``, Theta(n |P|).  Upper-bounds the
    DTW value for every valid path; equals the squared Euclidean distance on
    the diagonal path under the default metric.
    """
    X, Z = _check_pair(X, Z)
    if P.size != X.shape[1]:
        raise ValueError(f"path is for T={P.size}, series have T={X.shape[1]}")
    problem = validate(P)
    if problem is not None:
        raise ValueError(f"invalid path: {problem}")
    return float(_kernels.seq_sum(m.along_cells(X, Z, P.rows0, P.cols0)))


def dist_p_gradient(X, Z, P: AlignmentPath, m: PointMetric = SQUARED_L2) -> np.ndarray:
    """Closed-form gradient of :func:`dist_p` with respect to ``Z``.

    For squared-l2: ``d/dZ_j = sum over (i, j) in P of 2 (Z_j - X_i)``.
    Columns visited by several cells accumulate each contribution.
    """
    X, Z = _check_pair(X, Z)
    if P.size != X.shape[1]:
        raise ValueError(f"path is for T={P.size}, series have T={X.shape[1]}")
    problem = validate(P)
    if problem is not None:
        raise ValueError(f"invalid path: {problem}")
    g = m.elementwise_gradient(Z[:, P.cols0] - X[:, P.rows0])
    out = np.zeros((Z.shape[1], Z.shape[0]))
    np.add.at(out, P.cols0, g.T)
    return out.T


def soft_dtw(X, Z, gamma: float = 1.0, m: PointMetric = SQUARED_L2) -> SoftDtwResult:
    """Soft-DTW value and its exact gradient with respect to ``Z``.

    The DP of :func:`cost_matrix` with min replaced by the temperature-gamma
    soft-min; the gradient is computed by reverse accumulation through the
    DP (a backward sweep producing dValue/dD, chained through the frame
    metric).  ``soft_dtw <= dtw`` for every gamma > 0, and the value
    converges to the exact DTW as gamma -> 0.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    X, Z = _check_pair(X, Z)
    D = m.pairwise(X, Z)
    R = _kernels.soft_accumulate(D, gamma)
    E = _kernels.soft_gradient(R, D, gamma)
    # dValue/dZ[:, j] = sum_i E[i, j] * d d(X_i, Z_j) / dZ_j
    G = m.elementwise_gradient(Z[:, None, :] - X[:, :, None])  # (n, T_x, T_z)
    grad = np.einsum("ij,nij->nj", E, G)
    return SoftDtwResult(float(R[-1, -1]), grad)


def dtw_variant(X, Z, mode: str = "dependent", m: PointMetric = SQUARED_L2) -> float:
    """Multivariate DTW flavors.

    ``dependent`` warps all channels together (frame metric over n-vectors;
    this is what every other operation uses).  ``independent`` runs
    univariate DTW per channel and sums the values.
    """
    X, Z = _check_pair(X, Z)
    if mode == "dependent":
        return dtw(X, Z, m).value
    if mode == "independent":
        return float(
            sum(dtw(X[c : c + 1], Z[c : c + 1], m).value for c in range(X.shape[0]))
        )
    raise ValueError(f"unknown mode {mode!r}; choose 'dependent' or 'independent'")


@lru_cache(maxsize=8)
def _path_index_table(T: int):
    """Padded cell-index arrays for every enumerated path on a T x T grid."""
    all_paths = enumerate_paths(T)
    L = 2 * T - 1
    rows = np.zeros((len(all_paths), L), dtype=np.int64)
    cols = np.zeros((len(all_paths), L), dtype=np.int64)
    mask = np.zeros((len(all_paths), L), dtype=np.float64)
    for k, p in enumerate(all_paths):
        n = len(p)
        rows[k, :n] = p.rows0
        cols[k, :n] = p.cols0
        mask[k, :n] = 1.0
    return rows, cols, mask


def brute_force_dtw(X, Z, m: PointMetric = SQUARED_L2) -> float:
    """Minimum path cost by exhaustive enumeration (test oracle).

    Independent of the DP: evaluates dist_p on every enumerated path and
    takes the minimum.  Guarded at T <= 10 (Delannoy growth).
    """
    X, Z = _check_pair(X, Z)
    T = X.shape[1]
    if T > 10:
        raise ValueError(f"brute_force_dtw limited to T <= 10, got {T}")
    D = m.pairwise(X, Z)
    rows, cols, mask = _path_index_table(T)
    costs = (D[rows, cols] * mask).sum(axis=1)
    return float(costs.min())
