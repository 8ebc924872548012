"""Numba dynamic-programming kernels for the DTW engine.

No ``fastmath``: the oracle-equivalence and bound tests compare against
independently summed path costs, so IEEE float64 semantics must be exact.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def accumulate(D):
    """Fill the accumulated-cost matrix from a pairwise frame-distance grid.

    First row/column accumulate along their only predecessor; interior cells
    add the minimum of the three predecessors.
    """
    T1, T2 = D.shape
    C = np.empty((T1, T2), dtype=np.float64)
    C[0, 0] = D[0, 0]
    for j in range(1, T2):
        C[0, j] = D[0, j] + C[0, j - 1]
    for i in range(1, T1):
        C[i, 0] = D[i, 0] + C[i - 1, 0]
        for j in range(1, T2):
            m = C[i - 1, j - 1]
            if C[i - 1, j] < m:
                m = C[i - 1, j]
            if C[i, j - 1] < m:
                m = C[i, j - 1]
            C[i, j] = D[i, j] + m
    return C


@njit(cache=True)
def seq_sum(v):
    """Strict left-to-right float64 sum.

    The DP accumulates path costs sequentially; summing a backtracked path's
    frame distances in the same order reproduces the DP value bitwise, which
    numpy's pairwise ``sum`` would not.
    """
    s = 0.0
    for k in range(v.shape[0]):
        s += v[k]
    return s


@njit(cache=True)
def soft_accumulate(D, gamma):
    """Soft-DTW forward pass: the same DP with min replaced by soft-min.

    soft-min_gamma(a,b,c) = -gamma*log(exp(-a/gamma)+exp(-b/gamma)+exp(-c/gamma)),
    evaluated in stabilized form (missing predecessors enter as +inf and
    contribute exactly zero weight, so boundary cells reduce to plain
    accumulation).
    """
    T1, T2 = D.shape
    inf = np.inf
    R = np.empty((T1, T2), dtype=np.float64)
    for i in range(T1):
        for j in range(T2):
            if i == 0 and j == 0:
                R[0, 0] = D[0, 0]
                continue
            a = R[i - 1, j] if i > 0 else inf
            b = R[i, j - 1] if j > 0 else inf
            c = R[i - 1, j - 1] if (i > 0 and j > 0) else inf
            m = min(a, min(b, c))
            s = (
                np.exp(-(a - m) / gamma)
                + np.exp(-(b - m) / gamma)
                + np.exp(-(c - m) / gamma)
            )
            R[i, j] = D[i, j] + (m - gamma * np.log(s))
    return R


@njit(cache=True)
def soft_gradient(R, D, gamma):
    """Reverse sweep of the soft-DTW DP.

    Returns E with E[i,j] = d R[-1,-1] / d D[i,j].  The transition weight
    from cell p to successor s is exp((R[s] - D[s] - R[p]) / gamma); since
    R[s] - D[s] is the soft-min over s's predecessors, the exponent is <= 0
    and the sweep is numerically stable.
    """
    T1, T2 = R.shape
    E = np.zeros((T1, T2), dtype=np.float64)
    E[T1 - 1, T2 - 1] = 1.0
    for i in range(T1 - 1, -1, -1):
        for j in range(T2 - 1, -1, -1):
            if i == T1 - 1 and j == T2 - 1:
                continue
            acc = 0.0
            if i + 1 < T1:
                acc += E[i + 1, j] * np.exp((R[i + 1, j] - D[i + 1, j] - R[i, j]) / gamma)
            if j + 1 < T2:
                acc += E[i, j + 1] * np.exp((R[i, j + 1] - D[i, j + 1] - R[i, j]) / gamma)
            if i + 1 < T1 and j + 1 < T2:
                acc += E[i + 1, j + 1] * np.exp(
                    (R[i + 1, j + 1] - D[i + 1, j + 1] - R[i, j]) / gamma
                )
            E[i, j] = acc
    return E
