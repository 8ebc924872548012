"""Hand-written differentiable classifier (1D conv / maxpool / dense).

Reverse-mode gradients are derived per layer by hand and verified against
central finite differences -- four layer kinds do not justify an autodiff
engine.  Everything runs batch-first on numpy arrays: (B, n, T) for the
convolutional trunk, (B, dim) after flattening.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Conv1D",
    "MaxPool1D",
    "Dense",
    "ArchitectureSpec",
    "Classifier",
    "TrainConfig",
    "EpochStats",
    "PRESETS",
    "build_preset",
    "train",
    "input_gradient",
    "finite_diff_check",
    "FiniteDiffReport",
    "kink_margin",
    "softmax",
    "cross_entropy",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class Conv1D:
    filters: int
    kernel: int  # valid padding, stride 1, always followed by ReLU


@dataclass(frozen=True)
class MaxPool1D:
    width: int  # non-overlapping windows; trailing remainder dropped


@dataclass(frozen=True)
class Dense:
    units: int
    relu: bool = True


@dataclass(frozen=True)
class ArchitectureSpec:
    """Layer list plus input/output shape; shapes are checked eagerly."""

    layers: tuple
    n_channels: int
    length: int
    n_classes: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("architecture needs at least one layer")
        last = self.layers[-1]
        if not isinstance(last, Dense) or last.relu or last.units != self.n_classes:
            raise ValueError(
                f"final layer must be dense-linear with {self.n_classes} units"
            )
        self.shapes  # force shape validation at construction

    @cached_property
    def shapes(self):
        """shapes[k] = activation shape entering layer k; shapes[-1] = output.

        Sequence shapes are ("seq", channels, length); flattened ones are
        ("flat", dim).
        """
        out = [("seq", self.n_channels, self.length)]
        for li, layer in enumerate(self.layers):
            mode = out[-1][0]
            if isinstance(layer, Conv1D):
                if mode != "seq":
                    raise ValueError(f"layer {li}: conv1d after flatten")
                _, c, t = out[-1]
                t2 = t - layer.kernel + 1
                if t2 < 1:
                    raise ValueError(
                        f"layer {li}: kernel {layer.kernel} exceeds length {t}"
                    )
                out.append(("seq", layer.filters, t2))
            elif isinstance(layer, MaxPool1D):
                if mode != "seq":
                    raise ValueError(f"layer {li}: maxpool1d after flatten")
                _, c, t = out[-1]
                t2 = t // layer.width
                if t2 < 1:
                    raise ValueError(
                        f"layer {li}: pool width {layer.width} exceeds length {t}"
                    )
                out.append(("seq", c, t2))
            elif isinstance(layer, Dense):
                dim = out[-1][1] * out[-1][2] if mode == "seq" else out[-1][1]
                out.append(("flat", layer.units, 1))
            else:
                raise ValueError(f"layer {li}: unknown layer {layer!r}")
        return tuple(out)

    def _param_shapes(self):
        """(W shape, b shape) per layer; None for pooling."""
        out = []
        for k, layer in enumerate(self.layers):
            mode, a, b = self.shapes[k]
            if isinstance(layer, Conv1D):
                out.append(((layer.filters, a, layer.kernel), (layer.filters,)))
            elif isinstance(layer, Dense):
                in_dim = a * b if mode == "seq" else a
                out.append(((layer.units, in_dim), (layer.units,)))
            else:
                out.append(None)
        return out

    @property
    def param_count(self) -> int:
        total = 0
        for ps in self._param_shapes():
            if ps is not None:
                total += int(np.prod(ps[0])) + int(np.prod(ps[1]))
        return total

    def to_json(self) -> dict:
        enc = []
        for layer in self.layers:
            if isinstance(layer, Conv1D):
                enc.append(["conv", layer.filters, layer.kernel])
            elif isinstance(layer, MaxPool1D):
                enc.append(["pool", layer.width])
            else:
                enc.append(["dense", layer.units, int(layer.relu)])
        return {
            "layers": enc,
            "n_channels": self.n_channels,
            "length": self.length,
            "n_classes": self.n_classes,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ArchitectureSpec":
        layers = []
        for item in doc["layers"]:
            if item[0] == "conv":
                layers.append(Conv1D(int(item[1]), int(item[2])))
            elif item[0] == "pool":
                layers.append(MaxPool1D(int(item[1])))
            elif item[0] == "dense":
                layers.append(Dense(int(item[1]), bool(item[2])))
            else:
                raise ValueError(f"unknown layer tag {item[0]!r}")
        return cls(
            tuple(layers),
            int(doc["n_channels"]),
            int(doc["length"]),
            int(doc["n_classes"]),
        )


def mlp_spec(n, T, K, hidden=64):
    return ArchitectureSpec((Dense(hidden), Dense(K, relu=False)), n, T, K)


def cnn_spec(n, T, K):
    # scaled-down single-conv trunk; trains in seconds at desk scale
    return ArchitectureSpec(
        (Conv1D(16, 5), MaxPool1D(2), Dense(64), Dense(K, relu=False)), n, T, K
    )


def a0_spec(n, T, K):
    return ArchitectureSpec(
        (Conv1D(66, 12), MaxPool1D(12), Dense(1024), Dense(K, relu=False)), n, T, K
    )


def a1_spec(n, T, K):
    return ArchitectureSpec(
        (
            Conv1D(100, 5),
            Conv1D(50, 5),
            MaxPool1D(4),
            Dense(200),
            Dense(100),
            Dense(K, relu=False),
        ),
        n,
        T,
        K,
    )


def a1_scaled_spec(n, T, K):
    return ArchitectureSpec(
        (
            Conv1D(24, 5),
            Conv1D(12, 5),
            MaxPool1D(2),
            Dense(32),
            Dense(16),
            Dense(K, relu=False),
        ),
        n,
        T,
        K,
    )


PRESETS = {
    "mlp": mlp_spec,
    "cnn": cnn_spec,
    "a0-scaled": cnn_spec,
    "a1-scaled": a1_scaled_spec,
    "a0": a0_spec,
    "a1": a1_spec,
}


def build_preset(name: str, n: int, T: int, K: int) -> ArchitectureSpec:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](n, T, K)


class Classifier:
    """Parameters live in one flat float64 vector with per-layer views."""

    def __init__(self, spec: ArchitectureSpec, seed: int = 0, theta=None):
        self.spec = spec
        self.seed = int(seed)
        if theta is None:
            theta = self._init_theta(spec, seed)
        else:
            theta = np.array(theta, copy=True)
            if theta.shape != (spec.param_count,):
                raise ValueError(
                    f"theta has {theta.shape}, spec wants ({spec.param_count},)"
                )
        self.theta = theta

    @staticmethod
    def _init_theta(spec, seed):
        # Glorot-uniform weights, zero biases, drawn in layer order.
        rng = np.random.default_rng(seed)
        chunks = []
        for layer, ps in zip(spec.layers, spec._param_shapes()):
            if ps is None:
                continue
            w_shape, b_shape = ps
            if isinstance(layer, Conv1D):
                fan_in = w_shape[1] * w_shape[2]
                fan_out = w_shape[0] * w_shape[2]
            else:
                fan_in = w_shape[1]
                fan_out = w_shape[0]
            s = np.sqrt(6.0 / (fan_in + fan_out))
            chunks.append(rng.uniform(-s, s, size=w_shape).ravel())
            chunks.append(np.zeros(b_shape))
        return np.concatenate(chunks)

    def _views(self):
        """(W, b) views into theta per layer (None for pooling)."""
        out = []
        off = 0
        for ps in self.spec._param_shapes():
            if ps is None:
                out.append(None)
                continue
            w_shape, b_shape = ps
            w_sz = int(np.prod(w_shape))
            b_sz = int(np.prod(b_shape))
            W = self.theta[off : off + w_sz].reshape(w_shape)
            b = self.theta[off + w_sz : off + w_sz + b_sz]
            out.append((W, b))
            off += w_sz + b_sz
        return out

    def copy(self) -> "Classifier":
        return Classifier(self.spec, self.seed, self.theta)

    def astype(self, dtype) -> "Classifier":
        return Classifier(self.spec, self.seed, self.theta.astype(dtype))

    # --- forward ------------------------------------------------------------

    def _forward(self, Xb, keep_cache=False):
        act = Xb
        caches = []
        for layer, wb in zip(self.spec.layers, self._views()):
            if isinstance(layer, Conv1D):
                W, b = wb
                win = sliding_window_view(act, layer.kernel, axis=2)  # (B,C,L',k)
                pre = np.einsum("bclk,fck->bfl", win, W, optimize=True)
                pre += b[None, :, None]
                mask = pre > 0
                if keep_cache:
                    caches.append((act, mask))
                act = np.where(mask, pre, act.dtype.type(0))
            elif isinstance(layer, MaxPool1D):
                B, C, L = act.shape
                L2 = L // layer.width
                trimmed = act[:, :, : L2 * layer.width].reshape(B, C, L2, layer.width)
                idx = trimmed.argmax(axis=3)  # first maximum wins ties
                if keep_cache:
                    caches.append((idx, L))
                act = np.take_along_axis(trimmed, idx[..., None], axis=3)[..., 0]
            else:  # Dense
                W, b = wb
                shape_in = act.shape
                flat = act.reshape(act.shape[0], -1)
                pre = flat @ W.T + b
                if layer.relu:
                    mask = pre > 0
                    if keep_cache:
                        caches.append((flat, shape_in, mask))
                    act = np.where(mask, pre, act.dtype.type(0))
                else:
                    if keep_cache:
                        caches.append((flat, shape_in, None))
                    act = pre
        return (act, caches) if keep_cache else act

    def forward_batch(self, Xb) -> np.ndarray:
        Xb = np.asarray(Xb)
        if Xb.shape[1:] != (self.spec.n_channels, self.spec.length):
            raise ValueError(
                f"batch shape {Xb.shape[1:]} does not match spec "
                f"({self.spec.n_channels}, {self.spec.length})"
            )
        return self._forward(Xb)

    def forward(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape != (self.spec.n_channels, self.spec.length):
            raise ValueError(
                f"input shape {X.shape} does not match spec "
                f"({self.spec.n_channels}, {self.spec.length})"
            )
        return self._forward(X[None])[0]

    def predict(self, X) -> int:
        return int(np.argmax(self.forward(X)))

    def predict_batch(self, Xb) -> np.ndarray:
        return np.argmax(self.forward_batch(Xb), axis=1)

    # --- backward -----------------------------------------------------------

    def _backward(self, caches, dscores, need_params=True, need_input=True):
        grad_chunks = [None] * len(self.spec.layers)
        d = dscores
        views = self._views()
        for li in range(len(self.spec.layers) - 1, -1, -1):
            layer = self.spec.layers[li]
            cache = caches[li]
            if isinstance(layer, Dense):
                W, _ = views[li]
                flat, shape_in, mask = cache
                dpre = d if mask is None else d * mask
                if need_params:
                    grad_chunks[li] = (dpre.T @ flat, dpre.sum(axis=0))
                if need_input or li > 0:
                    d = (dpre @ W).reshape(shape_in)
            elif isinstance(layer, MaxPool1D):
                idx, L = cache
                B, C, L2 = d.shape
                dtr = np.zeros((B, C, L2, layer.width), dtype=d.dtype)
                np.put_along_axis(dtr, idx[..., None], d[..., None], axis=3)
                dact = np.zeros((B, C, L), dtype=d.dtype)
                dact[:, :, : L2 * layer.width] = dtr.reshape(B, C, L2 * layer.width)
                d = dact
            else:  # Conv1D
                W, _ = views[li]
                act_in, mask = cache
                k = layer.kernel
                dpre = d * mask
                if need_params:
                    win = sliding_window_view(act_in, k, axis=2)
                    grad_chunks[li] = (
                        np.einsum("bfl,bclk->fck", dpre, win, optimize=True),
                        dpre.sum(axis=(0, 2)),
                    )
                if need_input or li > 0:
                    pad = np.pad(dpre, ((0, 0), (0, 0), (k - 1, k - 1)))
                    wwin = sliding_window_view(pad, k, axis=2)  # (B,F,T,k)
                    d = np.einsum(
                        "bftk,fck->bct", wwin, W[:, :, ::-1], optimize=True
                    )
        gtheta = None
        if need_params:
            flat = []
            for g in grad_chunks:
                if g is not None:
                    flat.append(g[0].ravel())
                    flat.append(g[1].ravel())
            gtheta = np.concatenate(flat)
        return gtheta, (d if need_input else None)


def softmax(scores: np.ndarray) -> np.ndarray:
    s = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(scores: np.ndarray, label: int) -> float:
    s = scores - scores.max()
    return float(np.log(np.exp(s).sum()) - s[label])


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 16
    lr: float = 0.05
    momentum: float = 0.0  # 0 = plain SGD, otherwise SGD+momentum beta
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def train(model: Classifier, ds, cfg: TrainConfig):
    """Mini-batch SGD on softmax cross-entropy over the train split.

    Returns (trained model, per-epoch EpochStats list).  The input model is
    not mutated; training is deterministic per cfg.seed.
    """
    sel = ds.mask("train")
    if not sel.any():
        raise ValueError("train split is empty")
    Xtr = ds.X[sel]
    ytr = ds.y[sel]
    m = Xtr.shape[0]
    model = model.copy()
    theta = model.theta
    velocity = np.zeros_like(theta)
    rng = np.random.default_rng(cfg.seed)
    history = []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(m)
        loss_sum = 0.0
        for start in range(0, m, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            scores, caches = model._forward(Xtr[idx], keep_cache=True)
            shifted = scores - scores.max(axis=1, keepdims=True)
            logz = np.log(np.exp(shifted).sum(axis=1))
            loss_sum += float((logz - shifted[np.arange(len(idx)), ytr[idx]]).sum())
            p = softmax(scores)
            p[np.arange(len(idx)), ytr[idx]] -= 1.0
            g, _ = model._backward(caches, p / len(idx), need_input=False)
            velocity *= cfg.momentum
            velocity -= cfg.lr * g
            theta += velocity
        acc = float((model.predict_batch(Xtr) == ytr).mean())
        history.append(EpochStats(epoch, loss_sum / m, acc))
    return model, history


def input_gradient(F: Classifier, X, upstream) -> np.ndarray:
    """Exact gradient of <upstream, scores> with respect to the input.

    ReLU subgradient at 0 is 0; maxpool routes gradient to the first maximal
    element of each window.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    upstream = np.asarray(upstream)
    if upstream.shape != (F.spec.n_classes,):
        raise ValueError(
            f"upstream must have shape ({F.spec.n_classes},), got {upstream.shape}"
        )
    _, caches = F._forward(X[None].astype(F.theta.dtype), keep_cache=True)
    _, dX = F._backward(
        caches, upstream[None].astype(F.theta.dtype), need_params=False
    )
    return dX[0]


def kink_margin(F: Classifier, X) -> float:
    """Distance of the nearest hidden unit to a non-differentiable point.

    Minimum over ReLU pre-activation magnitudes and maxpool top-two margins;
    inputs with a comfortable margin give trustworthy finite differences.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    act = X[None].astype(F.theta.dtype)
    margin = np.inf
    for layer, wb in zip(F.spec.layers, F._views()):
        if isinstance(layer, Conv1D):
            W, b = wb
            win = sliding_window_view(act, layer.kernel, axis=2)
            pre = np.einsum("bclk,fck->bfl", win, W, optimize=True) + b[None, :, None]
            margin = min(margin, float(np.abs(pre).min()))
            act = np.maximum(pre, 0)
        elif isinstance(layer, MaxPool1D):
            B, C, L = act.shape
            L2 = L // layer.width
            tr = act[:, :, : L2 * layer.width].reshape(B, C, L2, layer.width)
            if layer.width > 1:
                top2 = np.sort(tr, axis=3)[..., -2:]
                # A tie between ReLU-clamped zeros is locally constant, not a
                # kink, so only windows whose max is positive constrain h.
                live = top2[..., 1] > 0
                if live.any():
                    gaps = top2[..., 1] - top2[..., 0]
                    margin = min(margin, float(gaps[live].min()))
            act = tr.max(axis=3)
        else:
            W, b = wb
            pre = act.reshape(act.shape[0], -1) @ W.T + b
            if layer.relu:
                margin = min(margin, float(np.abs(pre).min()))
                act = np.maximum(pre, 0)
            else:
                act = pre
    return margin


@dataclass(frozen=True)
class FiniteDiffReport:
    max_rel_error: float
    n_coords: int     # coordinates actually compared
    n_excluded: int   # coordinates skipped because a kink bent the stencil
    kink_free: bool   # no coordinate was excluded
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def finite_diff_check(
    F: Classifier,
    X,
    tolerance: float = 1e-4,
    upstream=None,
    h: float | None = None,
    dtype=np.float64,
    max_coords: int | None = None,
    seed: int = 0,
) -> FiniteDiffReport:
    """Compare the analytic input gradient to central finite differences.

    Checks every input coordinate (or a seeded random subset of
    ``max_coords``) and reports the max relative error.  ``dtype=float32``
    reruns the whole comparison in single precision, where the documented
    bound loosens to 1e-2.

    The scores are piecewise *linear* in the input, so away from ReLU /
    maxpool kinks the two one-sided secants agree exactly (up to rounding).
    A coordinate whose one-sided slopes disagree has a kink inside the
    stencil -- there the secant is not the derivative and the comparison
    proves nothing either way -- and is excluded (counted in
    ``n_excluded``).  Relative error uses a denominator floor
    max(|a|, |fd|, floor): in single precision central differences carry
    roughly eps*|f|/h of absolute noise, so a purely relative comparison of
    sub-noise gradients would measure the oracle, not the gradient.
    """
    dtype = np.dtype(dtype)
    if h is None:
        h = 1e-5 if dtype == np.float64 else 3e-3
    floor = 1e-6 if dtype == np.float64 else 1.0
    slope_tol = 1e-6 if dtype == np.float64 else 1e-2
    model = F if F.theta.dtype == dtype else F.astype(dtype)
    X = np.asarray(X, dtype=dtype)
    if X.ndim == 1:
        X = X[None, :]
    K = F.spec.n_classes
    if upstream is None:
        upstream = (1.0 + 0.5 * np.sin(np.arange(K))).astype(dtype)
    analytic = input_gradient(model, X, upstream)

    def objective(x):
        return float(upstream @ model.forward(x))

    n, T = X.shape
    coords = [(c, t) for c in range(n) for t in range(T)]
    if max_coords is not None and max_coords < len(coords):
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in pick]
    f0 = objective(X)
    max_rel = 0.0
    checked = 0
    excluded = 0
    for c, t in coords:
        xp = X.copy()
        xp[c, t] += h
        xm = X.copy()
        xm[c, t] -= h
        fp = objective(xp)
        fm = objective(xm)
        left = (f0 - fm) / float(h)
        right = (fp - f0) / float(h)
        if abs(left - right) > slope_tol * max(1.0, abs(left), abs(right)):
            excluded += 1
            continue
        fd = (fp - fm) / (2.0 * float(h))
        a = float(analytic[c, t])
        max_rel = max(max_rel, abs(a - fd) / max(abs(a), abs(fd), floor))
        checked += 1
    return FiniteDiffReport(
        max_rel_error=max_rel,
        n_coords=checked,
        n_excluded=excluded,
        kink_free=excluded == 0,
        tolerance=tolerance,
    )


# --- checkpoints -------------------------------------------------------------
#
# Byte layout (little-endian):
#   bytes 0..7   magic b"DTWADV1\n"
#   bytes 8..11  uint32 header length H
#   bytes 12..   H bytes of UTF-8 JSON:
#                {"format": 1, "arch": <ArchitectureSpec.to_json()>,
#                 "seed": int, "param_count": int}
#   then         param_count float64 values (theta, layer order, W then b)

CHECKPOINT_MAGIC = b"DTWADV1\n"


def save_checkpoint(model: Classifier, path) -> None:
    header = {
        "format": 1,
        "arch": model.spec.to_json(),
        "seed": model.seed,
        "param_count": int(model.theta.size),
    }
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(hb)))
        fh.write(hb)
        fh.write(model.theta.astype("<f8").tobytes())


def load_checkpoint(path) -> Classifier:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    (hlen,) = struct.unpack("<I", blob[8:12])
    header = json.loads(blob[12 : 12 + hlen].decode("utf-8"))
    if header.get("format") != 1:
        raise ValueError(f"{path}: unsupported checkpoint format {header.get('format')}")
    spec = ArchitectureSpec.from_json(header["arch"])
    theta = np.frombuffer(blob[12 + hlen :], dtype="<f8").astype(np.float64)
    if theta.size != header["param_count"] or theta.size != spec.param_count:
        raise ValueError(f"{path}: parameter count mismatch")
    return Classifier(spec, seed=int(header["seed"]), theta=theta)
