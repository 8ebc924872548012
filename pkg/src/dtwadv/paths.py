"""Alignment paths through a T x T grid, random admissible paths, PathSim.

An alignment path pairs time indices of two equal-length series: a monotone
cell sequence from (1,1) to (T,T) with unit steps right, down, or diagonal
(1-based indices throughout, matching the cost-matrix convention).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "AlignmentPath",
    "AdmissibleBand",
    "DEFAULT_BAND",
    "diagonal_path",
    "validate",
    "is_valid",
    "random_admissible_path",
    "enumerate_paths",
    "path_sim",
]

_STEPS = ((1, 1), (1, 0), (0, 1))


@dataclass(frozen=True)
class AlignmentPath:
    """Immutable cell sequence with its grid size.

    Construction does not validate monotonicity -- :func:`validate` is the
    checking operation, and consumers that require validity (``dist_p``)
    call it and raise.  Paths compare and hash by value, so they can be
    deduplicated with a ``set``.
    """

    cells: tuple[tuple[int, int], ...]
    size: int

    def __post_init__(self):
        object.__setattr__(
            self,
            "cells",
            tuple((int(i), int(j)) for i, j in self.cells),
        )
        object.__setattr__(self, "size", int(self.size))
        if self.size < 1:
            raise ValueError(f"grid size must be >= 1, got {self.size}")
        if not self.cells:
            raise ValueError("path must contain at least one cell")

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    @cached_property
    def cell_array(self) -> np.ndarray:
        """Cells as a read-only ``(len, 2)`` int64 array (1-based)."""
        a = np.asarray(self.cells, dtype=np.int64)
        a.flags.writeable = False
        return a

    @cached_property
    def rows0(self) -> np.ndarray:
        """0-based row (first-series) indices."""
        a = self.cell_array[:, 0] - 1
        a.flags.writeable = False
        return a

    @cached_property
    def cols0(self) -> np.ndarray:
        """0-based column (second-series) indices."""
        a = self.cell_array[:, 1] - 1
        a.flags.writeable = False
        return a

    def to_text(self) -> str:
        """Serialize as ``"(1,1)-(2,1)-..."`` for CLI round-trips."""
        return "-".join(f"({i},{j})" for i, j in self.cells)

    @classmethod
    def from_text(cls, text: str, size: int | None = None) -> "AlignmentPath":
        """Parse the :meth:`to_text` form.

        ``size`` defaults to the last cell's row index (the usual case of a
        complete path); pass it explicitly when parsing fragments.
        """
        cells = []
        for tok in text.strip().split("-"):
            m = re.fullmatch(r"\((\d+),(\d+)\)", tok.strip())
            if m is None:
                raise ValueError(f"malformed path cell {tok!r}")
            cells.append((int(m.group(1)), int(m.group(2))))
        if not cells:
            raise ValueError("empty path text")
        if size is None:
            size = cells[-1][0]
        return cls(tuple(cells), size)


@dataclass(frozen=True)
class AdmissibleBand:
    """Band constraint |i-j| <= ceil(r*T) for random path sampling.

    ``r`` is the allowed off-diagonal excursion as a fraction of T.  The
    band realizes the "safe range" that drops degenerate paths hugging the
    off-diagonal corners; ``r >= 1`` disables the constraint entirely.
    """

    r: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.r <= 1.0:
            raise ValueError(f"band fraction r must be in (0, 1], got {self.r}")

    def width(self, T: int) -> int:
        # Small epsilon so binary artifacts like 0.1 * 30 = 3.0000000000000004
        # do not widen the band; floor at 1 keeps the diagonal's immediate
        # neighborhood admissible on every grid.
        return max(1, math.ceil(self.r * T - 1e-9))


DEFAULT_BAND = AdmissibleBand(0.5)


def diagonal_path(T: int) -> AlignmentPath:
    """The path {(1,1), (2,2), ..., (T,T)}.

    Its accumulated pointwise distance is the (squared) Euclidean distance
    between the two series, which is why it anchors every DTW-vs-Euclidean
    comparison here.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    return AlignmentPath(tuple((t, t) for t in range(1, T + 1)), T)


def validate(path: AlignmentPath) -> str | None:
    """Check all path invariants; return a description of the first
    violation (with its cell index) or ``None`` when the path is valid.

    Vectorized: dist_p validates on every call, so this sits on the hot
    path of the attack loop and the runtime benchmark.
    """
    cells, T = path.cells, path.size
    a = path.cell_array
    if cells[0] != (1, 1):
        return f"cell 0: path must start at (1,1), got {cells[0]}"
    inside = (a >= 1) & (a <= T)
    if not inside.all():
        k = int(np.flatnonzero(~inside.all(axis=1))[0])
        i, j = cells[k]
        return f"cell {k}: ({i},{j}) outside the {T}x{T} grid"
    d = np.diff(a, axis=0)
    good = (d >= 0).all(axis=1) & (d <= 1).all(axis=1) & (d.sum(axis=1) >= 1)
    if not good.all():
        k = int(np.flatnonzero(~good)[0]) + 1
        return (
            f"step {k}: non-unit step {cells[k - 1]}->{cells[k]} "
            f"(allowed: down, right, diagonal)"
        )
    if cells[-1] != (T, T):
        return f"cell {len(cells) - 1}: path must end at ({T},{T}), got {cells[-1]}"
    if not (T <= len(cells) <= 2 * T - 1):
        return f"path length {len(cells)} outside [{T}, {2 * T - 1}]"
    return None


def is_valid(path: AlignmentPath) -> bool:
    return validate(path) is None


def random_admissible_path(
    T: int, band: AdmissibleBand = DEFAULT_BAND, seed: int = 0
) -> AlignmentPath:
    """Draw a random valid path inside the band, deterministic per seed.

    A random walk from (1,1): at each cell the admissible steps (those that
    stay inside the grid and the band) are sampled uniformly; on the last
    row/column the single remaining completion is forced.  Stepwise-uniform
    sampling is O(T) and reaches every admissible path with positive
    probability; it is *not* uniform over the path space.
    """
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    rng = np.random.default_rng(seed)
    w = band.width(T)
    i = j = 1
    cells = [(1, 1)]
    while (i, j) != (T, T):
        if i == T:
            j += 1
        elif j == T:
            i += 1
        else:
            options = [
                (di, dj) for di, dj in _STEPS if abs((i + di) - (j + dj)) <= w
            ]
            di, dj = options[rng.integers(len(options))]
            i += di
            j += dj
        cells.append((i, j))
    return AlignmentPath(tuple(cells), T)


def enumerate_paths(T: int) -> list[AlignmentPath]:
    """All valid paths on a T x T grid (brute-force oracle).

    The count is the central Delannoy number D(T-1, T-1): 1, 3, 13, 63, 321,
    1683, ... -- growth is why the guard caps T at 10.
    """
    if T > 10:
        raise ValueError(f"enumerate_paths limited to T <= 10, got {T}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    out: list[AlignmentPath] = []

    def extend(i: int, j: int, acc: list[tuple[int, int]]):
        if (i, j) == (T, T):
            out.append(AlignmentPath(tuple(acc), T))
            return
        for di, dj in _STEPS:
            ni, nj = i + di, j + dj
            if ni <= T and nj <= T:
                acc.append((ni, nj))
                extend(ni, nj, acc)
                acc.pop()

    extend(1, 1, [(1, 1)])
    return out


def path_sim(P1: AlignmentPath, P2: AlignmentPath, T: int | None = None) -> float:
    """Similarity measure between two alignment paths.

    Sum over each path's cells of the l1 distance to the nearest cell of the
    other path, scaled by 1/(2T).  Zero iff the two paths cover identical
    cell sets; symmetric exactly (the sums are integers, divided once at the
    end); the triangle inequality is *not* guaranteed and not asserted.
    """
    if P1.size != P2.size:
        raise ValueError(f"paths disagree on grid size: {P1.size} vs {P2.size}")
    if T is not None and T != P1.size:
        raise ValueError(f"explicit T={T} does not match path size {P1.size}")
    A, B = P1.cell_array, P2.cell_array
    M = np.abs(A[:, None, :] - B[None, :, :]).sum(axis=2)
    total = int(M.min(axis=1).sum()) + int(M.min(axis=0).sum())
    return total / (2 * P1.size)
