"""Multivariate time-series containers, CSV ingestion, synthetic data, splits.

A time series is a plain ``numpy.ndarray`` of shape ``(n, T)`` (``n`` channels,
``T`` samples, float64).  :func:`as_series` is the validating coercion used at
every public entry point; univariate ``(T,)`` input is promoted to ``(1, T)``.

Datasets are immutable: :class:`LabeledDataset` freezes its arrays at
construction, so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LabeledDataset",
    "as_series",
    "load_csv",
    "write_csv",
    "synth_two_class",
    "znormalize",
    "split",
]

SPLIT_TAGS = ("train", "val", "test")


def as_series(values) -> np.ndarray:
    """Coerce ``values`` to a validated ``(n, T)`` float64 time series.

    Parameters
    ----------
    values : array-like
        Either a ``(T,)`` univariate signal or an ``(n, T)`` multivariate one.

    Returns
    -------
    numpy.ndarray
        Float64 array of shape ``(n, T)`` with ``n >= 1``, ``T >= 1``.

    Raises
    ------
    ValueError
        If the array is not 1- or 2-dimensional, is empty, or contains
        non-finite values.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 1:
        x = x[np.newaxis, :]
    if x.ndim != 2:
        raise ValueError(f"time series must be 1-D or 2-D, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"time series must be non-empty, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("time series contains NaN or Inf")
    return x


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """A fixed-shape collection of labeled series with split tags.

    Attributes
    ----------
    X : numpy.ndarray
        Examples, shape ``(m, n, T)``, float64, read-only.
    y : numpy.ndarray
        Class indices in ``{0..K-1}``, shape ``(m,)``, read-only.
    tags : numpy.ndarray
        Per-example split tag (``"train"``/``"val"``/``"test"``).  Every
        example starts as ``"train"`` until :func:`split` reassigns.
    """

    X: np.ndarray
    y: np.ndarray
    tags: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 3:
            raise ValueError(f"X must have shape (m, n, T), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains NaN or Inf")
        y = np.asarray(self.y, dtype=np.int64)
        if y.shape != (X.shape[0],):
            raise ValueError(
                f"examples and labels disagree: {X.shape[0]} vs {y.shape}"
            )
        if X.shape[0] and y.min() < 0:
            raise ValueError("labels must be nonnegative class indices")
        tags = self.tags
        if tags is None:
            tags = np.full(X.shape[0], "train", dtype="<U8")
        else:
            tags = np.asarray(tags, dtype="<U8")
            if tags.shape != (X.shape[0],):
                raise ValueError("tags must have one entry per example")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "tags", _frozen(tags))

    @property
    def n_examples(self) -> int:
        return self.X.shape[0]

    @property
    def n_channels(self) -> int:
        return self.X.shape[1]

    @property
    def length(self) -> int:
        return self.X.shape[2]

    @property
    def n_classes(self) -> int:
        return int(self.y.max()) + 1 if self.n_examples else 0

    def mask(self, tag: str) -> np.ndarray:
        return self.tags == tag

    def subset(self, tag: str) -> "LabeledDataset":
        """Return the examples carrying ``tag`` as a new dataset."""
        m = self.mask(tag)
        return LabeledDataset(self.X[m], self.y[m], self.tags[m])

    def __len__(self) -> int:
        return self.n_examples


def load_csv(path, n: int, T: int) -> LabeledDataset:
    """Read a dataset from the package CSV layout.

    One example per row: integer label, then ``n * T`` channel-major values
    (all of channel 0, then channel 1, ...).  No header.

    Parameters
    ----------
    path : str or os.PathLike
        File to read.
    n, T : int
        Expected channel count and series length.

    Raises
    ------
    ValueError
        Empty file, wrong field count, or a non-numeric field; the message
        names the offending 0-based row.
    """
    expected = 1 + n * T
    rows, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for idx, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != expected:
                raise ValueError(
                    f"{path}: row {idx}: expected {expected} fields, got {len(parts)}"
                )
            try:
                labels.append(int(parts[0]))
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise ValueError(f"{path}: row {idx}: non-numeric field") from None
    if not rows:
        raise ValueError(f"{path}: empty file")
    X = np.asarray(rows, dtype=np.float64).reshape(len(rows), n, T)
    return LabeledDataset(X, np.asarray(labels))


def write_csv(ds: LabeledDataset, path) -> None:
    """Write ``ds`` in the layout :func:`load_csv` reads.

    Floats are serialized with 17 significant digits so a read/write
    round-trip reproduces every value exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for x, label in zip(ds.X, ds.y):
            fields = [str(int(label))]
            fields.extend(f"{v:.17g}" for v in x.ravel())
            fh.write(",".join(fields) + "\n")


# Synthetic generator constants: class 0 oscillates at _FREQ_A cycles per
# window, class 1 at _FREQ_B with a random smooth monotone time warp on top.
# Extra channels lag the first by _CHANNEL_STEP radians each.
_FREQ_A = 2.0
_FREQ_B = 3.0
_CHANNEL_STEP = 0.5
_WARP_MAX = 0.8
_NOISE = 0.1


def synth_two_class(count: int, n: int, T: int, seed: int) -> LabeledDataset:
    """Generate a balanced two-class synthetic dataset.

    Class 0 is a sinusoid with a random phase; class 1 is a
    frequency-shifted sinusoid passed through a random smooth monotone time
    warp.  Both classes get small Gaussian noise.  Warping (not amplitude or
    offset) is what separates the classes, so alignment-based distances see
    structure that pointwise distances blur.

    Channels beyond the first are fixed phase lags of the same waveform
    (one random phase per example), like an array of sensors watching one
    traveling wave.  A shared lag keeps a single alignment path able to
    match every channel at once; independent per-channel phases would make
    same-class examples unalignable and erase the DTW-vs-pointwise gap the
    generator exists to exhibit.

    Parameters
    ----------
    count : int
        Number of examples; must be even and >= 2 (classes are balanced).
    n, T : int
        Channels and length per example.
    seed : int
        Generator seed.  The function is pure: identical arguments produce
        bitwise-identical datasets.

    Returns
    -------
    LabeledDataset
        Labels alternate 0, 1, 0, 1, ...
    """
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    if count % 2:
        raise ValueError(f"count must be even to balance classes, got {count}")
    rng = np.random.default_rng(seed)
    t = np.arange(T, dtype=np.float64) / T
    X = np.empty((count, n, T))
    y = np.tile(np.array([0, 1], dtype=np.int64), count // 2)
    for k in range(count):
        if y[k] == 0:
            u = t
            freq = _FREQ_A
        else:
            a = rng.uniform(-_WARP_MAX, _WARP_MAX)
            u = t + a * np.sin(2.0 * np.pi * t) / (2.0 * np.pi)
            freq = _FREQ_B
        phase = rng.uniform(0.0, 2.0 * np.pi)
        for c in range(n):
            X[k, c] = np.sin(2.0 * np.pi * freq * u + phase + _CHANNEL_STEP * c)
        X[k] += _NOISE * rng.standard_normal((n, T))
    return LabeledDataset(X, y)


def znormalize(X) -> np.ndarray:
    """Z-normalize each channel to mean 0 and (population) std 1.

    Constant channels map to all-zeros rather than erroring; degenerate but
    legal sensor data should not kill a pipeline.

    Idempotent: ``znormalize(znormalize(X))`` equals ``znormalize(X)`` up to
    float rounding.
    """
    x = as_series(X)
    if x.shape[1] < 2:
        raise ValueError("znormalize needs T >= 2")
    mu = x.mean(axis=1, keepdims=True)
    sigma = x.std(axis=1, keepdims=True)
    out = np.zeros_like(x)
    live = sigma[:, 0] > 0.0
    out[live] = (x[live] - mu[live]) / sigma[live]
    return out


def split(ds: LabeledDataset, ratios, seed: int) -> LabeledDataset:
    """Assign stratified train/val/test tags.

    Parameters
    ----------
    ds : LabeledDataset
    ratios : (float, float, float)
        Train/val/test fractions; positive, summing to 1 within 1e-9.
    seed : int
        Shuffle seed; the assignment is deterministic per seed.

    Returns
    -------
    LabeledDataset
        Same examples and labels, new tags.  Within each class, counts follow
        largest-remainder rounding of ``ratios``; the train split always
        receives at least one example per class.

    Raises
    ------
    ValueError
        Bad ratios, or a class with fewer examples than splits.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != len(SPLIT_TAGS):
        raise ValueError(f"need {len(SPLIT_TAGS)} ratios, got {len(ratios)}")
    if any(r <= 0.0 for r in ratios):
        raise ValueError(f"ratios must be positive, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got sum {sum(ratios)!r}")
    rng = np.random.default_rng(seed)
    tags = np.empty(ds.n_examples, dtype="<U8")
    for cls in range(ds.n_classes):
        idx = np.flatnonzero(ds.y == cls)
        if idx.size < len(SPLIT_TAGS):
            raise ValueError(
                f"class {cls} has {idx.size} examples; "
                f"need at least {len(SPLIT_TAGS)} for a "
                f"{len(SPLIT_TAGS)}-way split"
            )
        counts = _largest_remainder(idx.size, ratios)
        idx = rng.permutation(idx)
        start = 0
        for tag, c in zip(SPLIT_TAGS, counts):
            tags[idx[start : start + c]] = tag
            start += c
    return LabeledDataset(ds.X, ds.y, tags)


def _largest_remainder(total: int, ratios) -> list[int]:
    exact = [total * r for r in ratios]
    counts = [int(e) for e in exact]
    # Hand out the remainder by descending fractional part; earlier splits
    # win ties so the result is deterministic.
    order = sorted(
        range(len(ratios)), key=lambda i: (exact[i] - counts[i], -i), reverse=True
    )
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    if counts[0] == 0:  # train must keep every class reachable
        donor = max(range(1, len(counts)), key=counts.__getitem__)
        counts[donor] -= 1
        counts[0] += 1
    return counts
