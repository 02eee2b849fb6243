"""Discrete k-dimensional torus coordinates and L1 wraparound distances."""

from __future__ import annotations

from collections import Counter
from typing import NamedTuple, Sequence

import numpy as np

from .errors import UsageError


class TorusCoord(NamedTuple):
    """A point on a torus with uniform side length ``side``."""

    axes: tuple[int, ...]
    side: int

    @classmethod
    def of(cls, axes: Sequence[int], side: int) -> "TorusCoord":
        axes = tuple(int(a) for a in axes)
        if side < 1:
            raise UsageError(f"torus side must be >= 1, got {side}")
        if not axes:
            raise UsageError("torus coordinate needs at least one axis")
        for a in axes:
            if not 0 <= a < side:
                raise UsageError(f"coordinate {a} outside [0, {side})")
        return cls(axes, int(side))

    @property
    def dim(self) -> int:
        return len(self.axes)


def axis_distance(a: int, b: int, side: int) -> int:
    d = abs(a - b) % side
    return min(d, side - d)


def lattice_distance(a: TorusCoord, b: TorusCoord) -> int:
    """Manhattan distance with wraparound on each axis."""
    if a.side != b.side or len(a.axes) != len(b.axes):
        raise UsageError(
            f"cannot compare coordinates of shape {len(a.axes)}x{a.side} "
            f"and {len(b.axes)}x{b.side}"
        )
    m = a.side
    return sum(axis_distance(x, y, m) for x, y in zip(a.axes, b.axes))


def lattice_distance_array(a: np.ndarray, b: np.ndarray, side: int) -> np.ndarray:
    """Vectorised :func:`lattice_distance` over the last axis of two arrays."""
    d = np.abs(np.asarray(a) - np.asarray(b)) % side
    return np.minimum(d, side - d).sum(axis=-1)


def torus_diameter(side: int, dim: int) -> int:
    if side < 1 or dim < 1:
        raise UsageError(f"need side >= 1 and dim >= 1, got side={side}, dim={dim}")
    return dim * (side // 2)


def all_coords(side: int, dim: int) -> np.ndarray:
    """Every coordinate of the torus as a ``(side**dim, dim)`` array, row-major."""
    grids = np.indices((side,) * dim).reshape(dim, -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


def distance_census(side: int, dim: int) -> dict[int, int]:
    """Number of cells at each distance from the origin.

    The torus is vertex transitive, so the census is the same from any cell.
    Computed as the dim-fold convolution of the one-axis census.
    """
    if side < 1 or dim < 1:
        raise UsageError(f"need side >= 1 and dim >= 1, got side={side}, dim={dim}")
    one_axis = Counter(axis_distance(0, x, side) for x in range(side))
    census: Counter[int] = Counter({0: 1})
    for _ in range(dim):
        nxt: Counter[int] = Counter()
        for d, n in census.items():
            for e, k in one_axis.items():
                nxt[d + e] += n * k
        census = nxt
    return dict(sorted(census.items()))


def offsets_by_distance(side: int, dim: int) -> dict[int, np.ndarray]:
    """Offset vectors from the origin grouped by their wraparound distance."""
    coords = all_coords(side, dim)
    dists = lattice_distance_array(coords, np.zeros(dim, dtype=np.int64), side)
    return {int(d): coords[dists == d] for d in np.unique(dists)}

