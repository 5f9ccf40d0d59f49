"""Midpoint-rule grids over axis-aligned boxes."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SupportBox:
    """Axis-aligned box ``[low_1, high_1] x ... x [low_d, high_d]``."""

    low: tuple
    high: tuple

    def __post_init__(self):
        low = tuple(float(v) for v in np.atleast_1d(self.low))
        high = tuple(float(v) for v in np.atleast_1d(self.high))
        if len(low) != len(high):
            raise ValueError("low and high must have the same dimension")
        if not all(np.isfinite(low + high)):
            raise ValueError("box bounds must be finite")
        if any(lo >= hi for lo, hi in zip(low, high)):
            raise ValueError(f"degenerate box: low={low}, high={high}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def dimension(self):
        return len(self.low)

    @property
    def widths(self):
        return tuple(hi - lo for lo, hi in zip(self.low, self.high))

    @property
    def volume(self):
        return float(np.prod(self.widths))

    def contains(self, points):
        """Boolean mask of the rows of ``points`` lying in the closed box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        low, high = np.asarray(self.low), np.asarray(self.high)
        return np.all((pts >= low) & (pts <= high), axis=1)

    def union(self, other):
        return SupportBox(
            tuple(min(a, b) for a, b in zip(self.low, other.low)),
            tuple(max(a, b) for a, b in zip(self.high, other.high)),
        )


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product midpoint rule on ``box`` with ``counts[p]`` cells along axis ``p``.

    Points are ordered C-style (last axis fastest), matching
    ``np.meshgrid(*axes, indexing="ij")``.
    """

    box: SupportBox
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if len(counts) == 1 and self.box.dimension > 1:
            counts = counts * self.box.dimension
        if len(counts) != self.box.dimension:
            raise ValueError("one point count per dimension is required")
        if any(c < 1 for c in counts):
            raise ValueError("point counts must be positive")
        object.__setattr__(self, "counts", counts)

    @property
    def dimension(self):
        return self.box.dimension

    @property
    def shape(self):
        return self.counts

    @property
    def size(self):
        return int(np.prod(self.counts))

    @cached_property
    def spacing(self):
        return tuple(w / c for w, c in zip(self.box.widths, self.counts))

    @cached_property
    def axes(self):
        return tuple(
            lo + (np.arange(c) + 0.5) * dx
            for lo, c, dx in zip(self.box.low, self.counts, self.spacing)
        )

    @cached_property
    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def weights(self):
        return np.full(self.size, self.cell_volume)

    def integrate(self, values, axis=-1):
        """Midpoint-rule integral of grid values (flattened along ``axis``)."""
        return np.sum(values, axis=axis) * self.cell_volume

    def refined(self, factor=2):
        return QuadratureGrid(self.box, tuple(c * factor for c in self.counts))


def midpoint_grid(box, points_per_dim):
    return QuadratureGrid(box, points_per_dim)
