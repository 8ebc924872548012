"""Targeted attacks through alignment paths, plus the standard baselines.

The main attack perturbs an input by gradient descent on

    L(X_adv) = label_loss + alpha1 * dist_P(X, X_adv) - alpha2 * dist_diag(X, X_adv)

where P is a *random admissible path* drawn once per run.  Minimizing dist_P
bounds the exact DTW from above (any fixed path does), so successful runs are
close in DTW even when their Euclidean distance is large; different path
draws yield different adversarial examples for the same input.

Baselines: the soft-DTW variant of the Carlini-Wagner loop (one deterministic
output, Theta(n T^2) per iteration), and untargeted FGS / PGD.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dtw import SQUARED_L2, PointMetric, dist_p, dist_p_gradient, dtw, soft_dtw
from .nn import Classifier, input_gradient, softmax
from .paths import (
    DEFAULT_BAND,
    AdmissibleBand,
    AlignmentPath,
    diagonal_path,
    random_admissible_path,
    validate,
)
from .signal import as_series

__all__ = [
    "AttackConfig",
    "AdversarialResult",
    "label_loss",
    "dtw_loss",
    "total_loss",
    "dtw_ar_attack",
    "cw_sdtw_attack",
    "fgs_attack",
    "pgd_attack",
    "attack_dataset",
    "calibrate_delta",
]


@dataclass(frozen=True)
class AttackConfig:
    """Knobs of the gradient-descent attack loop.

    Published defaults: rho=-5, eta=0.01, max_iters=5000, alpha1=alpha2=0.5.
    ``delta`` is the DTW acceptance bound applied *after* the loop (the loop
    minimizes, it never projects); calibrate it per dataset with
    :func:`calibrate_delta`.  ``path`` overrides the random draw with an
    explicit alignment path; ``gamma`` is the soft-DTW temperature used by
    the CW-SDTW baseline.  ``snapshot_every=0`` disables iterate snapshots.
    """

    rho: float = -5.0
    alpha1: float = 0.5
    alpha2: float = 0.5
    eta: float = 0.01
    max_iters: int = 5000
    delta: float = 1.0
    band: AdmissibleBand = DEFAULT_BAND
    path_seed: int = 0
    metric: PointMetric = SQUARED_L2
    snapshot_every: int = 50
    path: AlignmentPath | None = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.rho >= 0:
            raise ValueError(f"rho must be negative, got {self.rho}")
        if self.alpha1 <= 0:
            raise ValueError(f"alpha1 must be > 0, got {self.alpha1}")
        if self.alpha2 < 0:
            raise ValueError(f"alpha2 must be >= 0, got {self.alpha2}")
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0 (0 disables snapshots)")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class AdversarialResult:
    """One attack run: chosen iterate, full loss trace, distances, flags.

    ``trace`` has one row per visited state (max_iters + 1 rows; row 0 is the
    clean input) with columns (label loss, DTW loss, dist_P, dist_diag); the
    CW-SDTW baseline stores its soft-DTW value in the DTW-loss column and NaN
    for dist_P.  ``chosen_iteration`` minimizes the distance part of the DTW
    loss (dist_P, or the soft-DTW value for the CW baseline) among plateau
    iterations (label loss == rho), falling back to the total loss when the
    plateau is never reached; earlier iterations win ties.  ``final_dtw`` is
    recomputed with the exact DP on the chosen iterate, never from dist_P.
    """

    x_adv: np.ndarray
    y_target: int
    path: AlignmentPath | None
    trace: np.ndarray
    chosen_iteration: int
    final_dtw: float
    final_sql2: float
    fooled: bool
    within_delta: bool
    config: AttackConfig
    snapshots: tuple = field(default=(), repr=False)

    def __post_init__(self):
        for name in ("x_adv", "trace"):
            a = np.ascontiguousarray(getattr(self, name))
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def total_loss_trace(self) -> np.ndarray:
        return self.trace[:, 0] + self.trace[:, 1]


def label_loss(scores, y_target: int, rho: float) -> float:
    """max(max_{y != target} S_y - S_target, rho).

    Negative once the target leads every other score; plateaus at rho when
    the lead reaches |rho|, which switches the attack over to pure
    distance minimization.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] < 2:
        raise ValueError("label_loss needs at least 2 classes")
    if not 0 <= y_target < scores.shape[0]:
        raise ValueError(f"y_target {y_target} out of range")
    others = np.delete(scores, y_target)
    return float(max(others.max() - scores[y_target], rho))


def _label_loss_upstream(scores, y_target, rho):
    """Subgradient of label_loss with respect to the scores.

    Zero on the rho plateau; otherwise +1 at the attained non-target max
    (first index on ties) and -1 at the target.
    """
    K = scores.shape[0]
    others = np.delete(scores, y_target)
    value = others.max() - scores[y_target]
    if value <= rho:
        return None
    up = np.zeros(K)
    attained = int(np.argmax(others))
    if attained >= y_target:
        attained += 1
    up[attained] = 1.0
    up[y_target] = -1.0
    return up


def dtw_loss(
    X,
    X_cand,
    P: AlignmentPath,
    alpha1: float,
    alpha2: float,
    m: PointMetric = SQUARED_L2,
) -> float:
    """alpha1 * dist_P(X, X_cand) - alpha2 * dist_diag(X, X_cand).

    The first term pulls the candidate toward X along the chosen alignment;
    the negated diagonal term *pushes* it away in the Euclidean sense, which
    is what digs Euclidean blind spots.  With P = diagonal and alpha1 ==
    alpha2 the terms cancel for any candidate.
    """
    X = as_series(X)
    T = X.shape[1]
    return alpha1 * dist_p(X, X_cand, P, m) - alpha2 * dist_p(
        X, X_cand, diagonal_path(T), m
    )


def total_loss(F: Classifier, X, X_cand, y_target: int, P: AlignmentPath, cfg: AttackConfig):
    """Full attack loss and its gradient with respect to the candidate.

    value = label_loss(scores, y_target, rho) + dtw_loss(X, X_cand, P).
    The classifier part of the gradient comes from reverse mode through F;
    the distance part is the closed-form dist_P gradient (for squared-l2,
    2 * alpha1 * sum over path cells of (X_cand_j - X_i), minus the diagonal
    term).
    """
    X = as_series(X)
    X_cand = as_series(X_cand)
    ll, dl, _, _, grad = _loss_pieces(F, X, X_cand, y_target, P, cfg)
    return ll + dl, grad


def _loss_pieces(F, X, X_cand, y_target, P, cfg, diag=None):
    diag = diag if diag is not None else diagonal_path(X.shape[1])
    scores = F.forward(X_cand)
    ll = label_loss(scores, y_target, cfg.rho)
    dp = dist_p(X, X_cand, P, cfg.metric)
    dd = dist_p(X, X_cand, diag, cfg.metric)
    dl = cfg.alpha1 * dp - cfg.alpha2 * dd
    up = _label_loss_upstream(scores, y_target, cfg.rho)
    grad = np.zeros_like(X_cand) if up is None else input_gradient(F, X_cand, up)
    grad = grad + cfg.alpha1 * dist_p_gradient(X, X_cand, P, cfg.metric)
    if cfg.alpha2 != 0.0:
        grad = grad - cfg.alpha2 * dist_p_gradient(X, X_cand, diag, cfg.metric)
    return ll, dl, dp, dd, grad


class _Best:
    """Earliest-minimum tracker (strict <) with an iterate copy."""

    __slots__ = ("key", "iteration", "x")

    def __init__(self):
        self.key = np.inf
        self.iteration = -1
        self.x = None

    def offer(self, key, iteration, x):
        if key < self.key:
            self.key = key
            self.iteration = iteration
            self.x = x.copy()


def _finish(F, X, x_best, it_best, y_target, P, trace, snaps, cfg):
    T = X.shape[1]
    final_dtw = dtw(X, x_best, cfg.metric).value
    final_sql2 = dist_p(X, x_best, diagonal_path(T), cfg.metric)
    fooled = F.predict(x_best) == y_target
    x_best = np.ascontiguousarray(x_best)
    return AdversarialResult(
        x_adv=x_best,
        y_target=int(y_target),
        path=P,
        trace=trace,
        chosen_iteration=int(it_best),
        final_dtw=final_dtw,
        final_sql2=final_sql2,
        fooled=bool(fooled),
        within_delta=bool(final_dtw <= cfg.delta),
        config=cfg,
        snapshots=tuple(snaps),
    )


def dtw_ar_attack(F: Classifier, X, y_target: int, cfg: AttackConfig) -> AdversarialResult:
    """Targeted attack along a random admissible alignment path.

    Draws P once (``cfg.path`` overrides, else seeded by ``cfg.path_seed``),
    starts from the clean input, and runs ``max_iters`` gradient-descent
    steps on :func:`total_loss`.  Deterministic given (model parameters, X,
    cfg); failure to fool is reported in the flags, never raised.
    """
    X = as_series(X)
    T = X.shape[1]
    if cfg.path is not None:
        P = cfg.path
        problem = validate(P)
        if P.size != T or problem is not None:
            raise ValueError(f"explicit path unusable: {problem or 'size mismatch'}")
    else:
        P = random_admissible_path(T, cfg.band, cfg.path_seed)
    diag = diagonal_path(T)
    x = X.copy()
    trace = np.empty((cfg.max_iters + 1, 4))
    snaps: list[tuple[int, np.ndarray]] = []
    plateau_best = _Best()
    total_best = _Best()
    for it in range(cfg.max_iters + 1):
        ll, dl, dp, dd, grad = _loss_pieces(F, X, x, y_target, P, cfg, diag)
        trace[it] = (ll, dl, dp, dd)
        if ll == cfg.rho:
            # Track the alpha1 * dist_P part only.  The full dtw_loss is
            # unbounded below when alpha2 > 0 (the -dist_diag term rewards
            # drifting away forever), so minimizing it would always select
            # the last iterate; the dist_P term is what measures closeness
            # along P and it is what the selection is meant to preserve.
            plateau_best.offer(dp, it, x)
        total_best.offer(ll + dl, it, x)
        if cfg.snapshot_every and (
            it % cfg.snapshot_every == 0 or it == cfg.max_iters
        ):
            snaps.append((it, x.copy()))
        if it == cfg.max_iters:
            break
        x = x - cfg.eta * grad
    best = plateau_best if plateau_best.x is not None else total_best
    return _finish(F, X, best.x, best.iteration, y_target, P, trace, snaps, cfg)


def cw_sdtw_attack(F: Classifier, X, y_target: int, cfg: AttackConfig) -> AdversarialResult:
    """Carlini-Wagner-style loop with a soft-DTW distance term.

    total = label_loss + soft_dtw(X, x, gamma); the distance gradient comes
    from the soft-DTW reverse DP, so every iteration costs Theta(n T^2).  No
    randomness anywhere: one deterministic adversarial example per input.
    The trace's DTW-loss column holds the soft-DTW value; dist_P is NaN.
    """
    X = as_series(X)
    T = X.shape[1]
    diag = diagonal_path(T)
    x = X.copy()
    trace = np.empty((cfg.max_iters + 1, 4))
    snaps: list[tuple[int, np.ndarray]] = []
    plateau_best = _Best()
    total_best = _Best()
    for it in range(cfg.max_iters + 1):
        scores = F.forward(x)
        ll = label_loss(scores, y_target, cfg.rho)
        sd = soft_dtw(X, x, cfg.gamma, cfg.metric)
        dd = dist_p(X, x, diag, cfg.metric)
        trace[it] = (ll, sd.value, np.nan, dd)
        if ll == cfg.rho:
            plateau_best.offer(sd.value, it, x)
        total_best.offer(ll + sd.value, it, x)
        if cfg.snapshot_every and (
            it % cfg.snapshot_every == 0 or it == cfg.max_iters
        ):
            snaps.append((it, x.copy()))
        if it == cfg.max_iters:
            break
        up = _label_loss_upstream(scores, y_target, cfg.rho)
        grad = np.zeros_like(x) if up is None else input_gradient(F, x, up)
        x = x - cfg.eta * (grad + sd.gradient)
    best = plateau_best if plateau_best.x is not None else total_best
    return _finish(F, X, best.x, best.iteration, y_target, None, trace, snaps, cfg)


def _ce_input_gradient(F, X, y_true):
    scores = F.forward(X)
    up = softmax(scores)
    up[y_true] -= 1.0
    return input_gradient(F, X, up)


def fgs_attack(F: Classifier, X, y_true: int, eps: float) -> np.ndarray:
    """Fast gradient sign: X + eps * sign(grad_X CE(F(X), y_true)).

    Untargeted; a single step.  eps=0 returns X unchanged.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    X = as_series(X)
    return X + eps * np.sign(_ce_input_gradient(F, X, y_true))


def pgd_attack(
    F: Classifier,
    X,
    y_true: int,
    eps: float,
    steps: int = 10,
    step_size: float | None = None,
) -> np.ndarray:
    """Projected gradient descent inside the l-infinity eps-ball around X.

    Iterated signed ascent steps on the cross-entropy, each followed by
    clipping back to [X - eps, X + eps].  Untargeted.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    X = as_series(X)
    if step_size is None:
        step_size = 2.5 * eps / steps
    x = X.copy()
    for _ in range(steps):
        x = x + step_size * np.sign(_ce_input_gradient(F, x, y_true))
        x = np.clip(x, X - eps, X + eps)
    return x


def calibrate_delta(ds, m: PointMetric = SQUARED_L2, percentile: float = 10.0) -> float:
    """DTW acceptance bound: a low percentile of inter-class DTW distances.

    Uses the train split (falls back to the whole dataset when nothing is
    tagged).  The 10th percentile means an accepted adversarial example is
    closer to its source, DTW-wise, than nearly every genuine class-to-class
    gap.
    """
    sub = ds.subset("train")
    if sub.n_examples == 0:
        sub = ds
    values = []
    for a in range(sub.n_examples):
        for b in range(a + 1, sub.n_examples):
            if sub.y[a] != sub.y[b]:
                values.append(dtw(sub.X[a], sub.X[b], m).value)
    if not values:
        raise ValueError("delta calibration needs at least two classes")
    return float(np.percentile(values, percentile))


_POOL_STATE: dict = {}


def _pool_init(F, cfg):
    _POOL_STATE["F"] = F
    _POOL_STATE["cfg"] = cfg


def _pool_run(task):
    kind, x, target, seed = task
    cfg = replace(_POOL_STATE["cfg"], path_seed=seed)
    fn = dtw_ar_attack if kind == "dtw-ar" else cw_sdtw_attack
    return fn(_POOL_STATE["F"], x, target, cfg)


def attack_dataset(
    F: Classifier,
    X_batch,
    y_targets,
    cfg: AttackConfig,
    base_seed: int = 0,
    kind: str = "dtw-ar",
    jobs: int = 1,
) -> list[AdversarialResult]:
    """Attack a batch; example k uses path seed ``base_seed + 1000 + k``.

    Results are in input order regardless of ``jobs``, so a parallel run is
    bitwise-identical to a serial one.
    """
    if kind not in ("dtw-ar", "cw-sdtw"):
        raise ValueError(f"unknown attack kind {kind!r}")
    X_batch = np.asarray(X_batch, dtype=np.float64)
    y_targets = np.asarray(y_targets, dtype=np.int64)
    if X_batch.shape[0] != y_targets.shape[0]:
        raise ValueError("one target per example required")
    tasks = [
        (kind, X_batch[k], int(y_targets[k]), base_seed + 1000 + k)
        for k in range(X_batch.shape[0])
    ]
    if jobs <= 1 or len(tasks) <= 1:
        _pool_init(F, cfg)
        return [_pool_run(t) for t in tasks]
    try:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_pool_init, initargs=(F, cfg)
        ) as pool:
            return list(pool.map(_pool_run, tasks))
    except OSError as exc:  # process pools are a convenience, not a contract
        warnings.warn(f"parallel attack failed ({exc}); falling back to serial")
        _pool_init(F, cfg)
        return [_pool_run(t) for t in tasks]
