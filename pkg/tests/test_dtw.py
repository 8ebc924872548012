"""DTW engine: exact DP, fixed-path distances, soft-DTW, metrics.

Expected values come from hand-worked grids or from exhaustive path
enumeration written out locally -- never from the module under test.
"""

import numpy as np
import pytest

from dtwadv.dtw import (
    L1,
    SQUARED_L2,
    PointMetric,
    brute_force_dtw,
    cost_matrix,
    dist_p,
    dist_p_gradient,
    dtw,
    dtw_variant,
    lp_metric,
    pointwise_distance,
    soft_dtw,
)
from dtwadv.paths import AlignmentPath, diagonal_path, enumerate_paths, random_admissible_path

# A worked example, squared-l2, X = [0,1,2], Z = [0,2,2]:
#
#   frame grid D          accumulated C
#   [0 4 4]               [0 4 8]
#   [1 1 1]               [1 1 2]
#   [4 0 0]               [5 1 1]
#
# DTW = 1, and backtracking (diagonal preferred on ties) gives the plain
# diagonal (1,1)-(2,2)-(3,3).
X_HAND = np.array([[0.0, 1.0, 2.0]])
Z_HAND = np.array([[0.0, 2.0, 2.0]])


def test_hand_cost_matrix():
    cm = cost_matrix(X_HAND, Z_HAND)
    expected = np.array([[0.0, 4.0, 8.0], [1.0, 1.0, 2.0], [5.0, 1.0, 1.0]])
    assert np.array_equal(cm.values, expected)
    assert cm.T == 3


def test_hand_dtw_value_and_path():
    res = dtw(X_HAND, Z_HAND)
    assert res.value == 1.0
    assert res.path.cells == ((1, 1), (2, 2), (3, 3))


def test_hand_dtw_two_channels():
    # Every frame pair is at squared distance 1, so DTW = T = 2 along the
    # (tie-broken) diagonal.
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    Z = np.ones((2, 2))
    res = dtw(X, Z)
    assert res.value == 2.0
    assert res.path.cells == ((1, 1), (2, 2))


def test_univariate_input_promoted():
    assert dtw([0.0, 1.0, 2.0], [0.0, 2.0, 2.0]).value == 1.0


def test_dtw_identity_and_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(20):
        X = rng.standard_normal((2, 12))
        Z = rng.standard_normal((2, 12))
        assert dtw(X, X).value == 0.0
        assert dtw(X, Z).value == dtw(Z, X).value


def test_dtw_path_cost_reproduces_value_bitwise():
    # The backtracked path, summed in path order, must equal the DP cell
    # exactly -- not within a tolerance.
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        T = int(rng.integers(2, 30))
        X = rng.standard_normal((n, T))
        Z = rng.standard_normal((n, T))
        res = dtw(X, Z)
        assert dist_p(X, Z, res.path) == res.value


def _enumerated_min(X, Z, m=SQUARED_L2):
    """Local brute-force oracle: min over all monotone paths."""
    D = m.pairwise(X, Z)
    best = np.inf
    for p in enumerate_paths(X.shape[1]):
        best = min(best, D[p.rows0, p.cols0].sum())
    return best


def test_dtw_equals_enumerated_minimum():
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(1, 4))
        T = int(rng.integers(2, 7))
        X = rng.standard_normal((n, T))
        Z = rng.standard_normal((n, T))
        v = dtw(X, Z).value
        ref = _enumerated_min(X, Z)
        assert v == pytest.approx(ref, rel=1e-12)
        assert brute_force_dtw(X, Z) == pytest.approx(ref, rel=1e-12)


def test_brute_force_guard():
    X = np.zeros((1, 11))
    with pytest.raises(ValueError, match="T <= 10"):
        brute_force_dtw(X, X)


def test_shape_mismatch_raises():
    with pytest.raises(ValueError, match="shapes differ"):
        dtw(np.zeros((1, 4)), np.zeros((1, 5)))
    with pytest.raises(ValueError, match="shapes differ"):
        dist_p(np.zeros((2, 4)), np.zeros((1, 4)), diagonal_path(4))


# ------------------------------------------------------------------ dist_p


def test_dist_p_diagonal_is_squared_euclidean():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((3, 10))
    Z = rng.standard_normal((3, 10))
    want = float(((X - Z) ** 2).sum())
    assert dist_p(X, Z, diagonal_path(10)) == pytest.approx(want, rel=1e-15)


def test_dist_p_hand_off_diagonal():
    # (1,1)-(2,1)-(3,2)-(3,3): d(0,0) + d(1,0) + d(2,2) + d(2,2) = 0+1+0+0
    P = AlignmentPath(((1, 1), (2, 1), (3, 2), (3, 3)), 3)
    assert dist_p(X_HAND, Z_HAND, P) == 1.0


def test_dist_p_upper_bounds_dtw():
    rng = np.random.default_rng(4)
    for _ in range(200):
        T = int(rng.integers(2, 25))
        X = rng.standard_normal((1, T))
        Z = rng.standard_normal((1, T))
        P = random_admissible_path(T, seed=int(rng.integers(1 << 30)))
        assert dist_p(X, Z, P) >= dtw(X, Z).value


def test_dist_p_wrong_length_path():
    with pytest.raises(ValueError, match="T="):
        dist_p(np.zeros((1, 5)), np.zeros((1, 5)), diagonal_path(4))


def test_dist_p_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    for metric in (SQUARED_L2, L1):
        X = rng.standard_normal((2, 8))
        Z = rng.standard_normal((2, 8))
        P = random_admissible_path(8, seed=9)
        g = dist_p_gradient(X, Z, P, metric)
        h = 1e-6
        for c in range(2):
            for t in range(8):
                zp, zm = Z.copy(), Z.copy()
                zp[c, t] += h
                zm[c, t] -= h
                fd = (dist_p(X, zp, P, metric) - dist_p(X, zm, P, metric)) / (2 * h)
                assert g[c, t] == pytest.approx(fd, abs=1e-6)


def test_dist_p_gradient_accumulates_repeated_columns():
    # Path visits column 1 twice; the gradient there is the sum of both
    # cells' contributions: 2(z_0 - x_0) + 2(z_0 - x_1).
    X = np.array([[1.0, 3.0]])
    Z = np.array([[10.0, 0.0]])
    P = AlignmentPath(((1, 1), (2, 1), (2, 2)), 2)
    g = dist_p_gradient(X, Z, P)
    assert g[0, 0] == 2 * (10.0 - 1.0) + 2 * (10.0 - 3.0)
    assert g[0, 1] == 2 * (0.0 - 3.0)


# ------------------------------------------------------------------ metrics


def test_point_metrics_hand_values():
    a, b = np.array([1.0, -2.0]), np.array([3.0, 1.0])
    assert pointwise_distance(a, b) == 4.0 + 9.0
    assert pointwise_distance(a, b, L1) == 2.0 + 3.0
    assert pointwise_distance(a, b, lp_metric(3)) == 8.0 + 27.0
    assert pointwise_distance(a, a) == 0.0


def test_l1_dtw_hand_value():
    # |.| grid for the worked pair is D = [[0,2,2],[1,1,1],[2,0,0]]; the DP
    # again bottoms out at 1.
    assert dtw(X_HAND, Z_HAND, L1).value == 1.0


def test_metric_validation():
    with pytest.raises(ValueError, match="unknown metric"):
        PointMetric("cosine")
    with pytest.raises(ValueError, match="p > 0"):
        PointMetric("lp")
    with pytest.raises(ValueError, match="no p parameter"):
        PointMetric("l1", p=2.0)


# ------------------------------------------------------------------ soft-DTW


def test_soft_dtw_below_exact_and_converges():
    rng = np.random.default_rng(6)
    for _ in range(20):
        T = int(rng.integers(2, 16))
        X = rng.standard_normal((1, T))
        Z = rng.standard_normal((1, T))
        hard = dtw(X, Z).value
        assert soft_dtw(X, Z, 1.0).value <= hard
        # gamma -> 0 recovers the exact value
        assert soft_dtw(X, Z, 1e-4).value == pytest.approx(hard, abs=1e-2)


def test_soft_dtw_monotone_in_gamma():
    # More smoothing averages in more suboptimal paths, lowering the
    # soft minimum.
    rng = np.random.default_rng(7)
    X = rng.standard_normal((2, 12))
    Z = rng.standard_normal((2, 12))
    v = [soft_dtw(X, Z, g).value for g in (0.01, 0.1, 1.0, 10.0)]
    assert v[0] > v[1] > v[2] > v[3]


def test_soft_dtw_gradient_matches_finite_differences():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((2, 7))
    Z = rng.standard_normal((2, 7))
    for gamma in (0.1, 1.0):
        g = soft_dtw(X, Z, gamma).gradient
        h = 1e-6
        for c in range(2):
            for t in range(7):
                zp, zm = Z.copy(), Z.copy()
                zp[c, t] += h
                zm[c, t] -= h
                fd = (soft_dtw(X, zp, gamma).value - soft_dtw(X, zm, gamma).value) / (2 * h)
                assert g[c, t] == pytest.approx(fd, abs=1e-6)


def test_soft_dtw_rejects_bad_gamma():
    X = np.zeros((1, 3))
    for gamma in (0.0, -1.0):
        with pytest.raises(ValueError, match="gamma"):
            soft_dtw(X, X, gamma)


# ------------------------------------------------------------------ variants


def test_dtw_variant_modes():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((3, 10))
    Z = rng.standard_normal((3, 10))
    dep = dtw_variant(X, Z, "dependent")
    indep = dtw_variant(X, Z, "independent")
    assert dep == dtw(X, Z).value
    want = sum(dtw(X[c : c + 1], Z[c : c + 1]).value for c in range(3))
    assert indep == pytest.approx(want, rel=1e-15)
    # warping channels independently can only help
    assert indep <= dep
    with pytest.raises(ValueError, match="unknown mode"):
        dtw_variant(X, Z, "joint")
