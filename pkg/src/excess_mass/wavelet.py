"""Haar projection density estimator at resolution level ``j``.

With the Haar scaling function ``phi = 1_[0,1)`` the functions
``phi_{j,l}(t) = 2^{jd/2} phi(2^j t - l)`` are indicators of dyadic cells of
side ``2^-j``, anchored here at the lower corner of the support box. The
estimate is piecewise constant, ``f_j(t) = 2^{jd} * (share of sample in t's cell)``.
"""

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .densities import Sample

# Haar: support [0, 2M] with M = 1/2 and sup|phi| = 1, so (2M)^{2d} |phi|_inf^2 = 1
HAAR_GAMMA = 1.0
DEFAULT_SMOOTHNESS = 2.0


@dataclass(frozen=True)
class LevelSchedule:
    j0: int
    j_inf: int

    def __contains__(self, level):
        return self.j0 <= level <= self.j_inf

    def levels(self):
        return range(self.j0, self.j_inf + 1)


def level_schedule(n, d):
    """``j0 = floor(log2(log n))`` and ``j_inf = floor(log2((n / log n)^(1/d)))``."""
    if n <= 1:
        raise ValueError("n must exceed 1")
    log_n = math.log(n)
    j0 = math.floor(math.log2(log_n))
    j_inf = math.floor(math.log2(n / log_n) / d)
    return LevelSchedule(max(j0, 0), max(j_inf, 0))


@dataclass(frozen=True)
class TheoreticalParameters:
    level: int
    order: int
    c0: float
    gamma: float
    smoothness: float


def c0_bound(s, d, gamma=HAAR_GAMMA):
    """Admissible constants satisfy ``C0 < min(2s, d) / (pi^2 gamma (2s + d))``."""
    return min(2.0 * s, d) / (math.pi**2 * gamma * (2.0 * s + d))


def theoretical_parameters(n, d, s=DEFAULT_SMOOTHNESS, c0=None, gamma=HAAR_GAMMA):
    """Rate-optimal level and Fourier order for smoothness ``s``.

    ``2^{j*} = (n log n)^{1/(2s+d)}`` (floored) and
    ``N* = floor((C0 n log n)^{s/(2s+d)})``. ``c0`` defaults to half its
    admissible bound; a supplied value must stay strictly below the bound.
    """
    if s <= 0:
        raise ValueError("smoothness must be > 0")
    if n < 3:
        raise ValueError("n must be >= 3")
    bound = c0_bound(s, d, gamma)
    if c0 is None:
        c0 = bound / 2.0
    elif not 0 < c0 < bound:
        raise ValueError(f"C0 = {c0} violates 0 < C0 < {bound:.6g}")
    nlog = n * math.log(n)
    level = max(0, math.floor(math.log2(nlog) / (2.0 * s + d)))
    order = max(1, math.floor((c0 * nlog) ** (s / (2.0 * s + d))))
    return TheoreticalParameters(level, order, float(c0), float(gamma), float(s))


@dataclass(frozen=True)
class HaarEstimator:
    """Fitted Haar estimator: cell counts of the sample on the level-``j`` partition."""

    level: int
    box: object
    counts: np.ndarray
    n: int

    @property
    def dimension(self):
        return self.box.dimension

    @property
    def cell_width(self):
        return 2.0 ** -self.level

    @property
    def cells_per_axis(self):
        return self.counts.shape

    @cached_property
    def alpha(self):
        """Empirical coefficients ``alpha_{j,l} = 2^{jd/2} * count_l / n``."""
        return 2.0 ** (self.level * self.dimension / 2.0) * self.counts / self.n

    @property
    def height(self):
        """Value ``2^{jd}`` of the estimate per unit sample share."""
        return 2.0 ** (self.level * self.dimension)

    def cell_index(self, t):
        """Multi-index of the cell holding each row of ``t``; raises outside the box."""
        pts = _as_points(t, self.dimension)
        if not np.all(self.box.contains(pts)):
            raise ValueError("evaluation point lies outside the support box")
        return _cell_index(pts, self.box, self.level, self.cells_per_axis)

    def share(self, t):
        """Sample share ``p_hat`` of the cell containing each point."""
        idx = self.cell_index(t)
        return self.counts[tuple(idx.T)] / self.n

    def evaluate(self, t):
        return evaluate(self, t)

    def variance(self, t, gamma=HAAR_GAMMA):
        return variance_estimate(self, t, gamma)


def _as_points(t, d):
    arr = np.asarray(t, dtype=float)
    if d == 1 and arr.ndim <= 1:
        return arr.reshape(-1, 1)
    arr = np.atleast_2d(arr)
    if arr.shape[1] != d:
        raise ValueError(f"points have {arr.shape[1]} coordinates, expected {d}")
    return arr


def _cell_index(pts, box, level, cells):
    low = np.asarray(box.low)
    raw = np.floor((pts - low) * 2.0**level).astype(np.int64)
    # the top face of the box belongs to the last cell along each axis
    return np.clip(raw, 0, np.asarray(cells) - 1)


def fit(sample, level, box):
    """Count sample points per level-``level`` cell; points outside ``box`` are dropped."""
    pts = sample.points if isinstance(sample, Sample) else _as_points(sample, box.dimension)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot fit an empty sample")
    if pts.shape[1] != box.dimension:
        raise ValueError("sample and box dimensions differ")
    level = int(level)
    if level < 0:
        raise ValueError("level must be >= 0")
    if n > 2 and level not in level_schedule(n, box.dimension):
        sched = level_schedule(n, box.dimension)
        warnings.warn(
            f"level {level} outside the recommended range [{sched.j0}, {sched.j_inf}]",
            stacklevel=2,
        )
    cells = tuple(max(1, math.ceil(w * 2.0**level - 1e-12)) for w in box.widths)
    inside = pts[box.contains(pts)]
    counts = np.zeros(cells)
    if inside.size:
        idx = _cell_index(inside, box, level, cells)
        np.add.at(counts, tuple(idx.T), 1.0)
    return HaarEstimator(level, box, counts, n)


def evaluate(est, t):
    """Piecewise-constant estimate ``2^{jd} * p_hat(cell of t)``."""
    out = est.height * est.share(t)
    return float(out[0]) if np.ndim(t) == 0 or (est.dimension > 1 and np.ndim(t) == 1) else out


def variance_estimate(est, t, gamma=HAAR_GAMMA):
    """Empirical variance of ``f_j(t)`` and its truncation.

    For Haar cells the double sum over ``(l1, l2)`` keeps only ``l1 = l2``
    and reduces to ``2^{2jd} p_hat (1 - p_hat) / n``. The truncated value is
    ``min(that, gamma 2^{jd} / n)``.

    Returns ``(raw, truncated)``.
    """
    p = est.share(t)
    raw = est.height**2 * p * (1.0 - p) / est.n
    cap = gamma * est.height / est.n
    truncated = np.minimum(raw, cap)
    if np.ndim(t) == 0 or (est.dimension > 1 and np.ndim(t) == 1):
        return float(raw[0]), float(truncated[0])
    return raw, truncated


def haar_basis(est, points):
    """Dense matrix ``phi_{j,l}(x)`` for every row ``x`` and every cell ``l`` (flattened)."""
    pts = _as_points(points, est.dimension)
    ncell = int(np.prod(est.cells_per_axis))
    out = np.zeros((pts.shape[0], ncell))
    inside = est.box.contains(pts)
    if np.any(inside):
        idx = _cell_index(pts[inside], est.box, est.level, est.cells_per_axis)
        flat = np.ravel_multi_index(tuple(idx.T), est.cells_per_axis)
        out[np.flatnonzero(inside), flat] = 2.0 ** (est.level * est.dimension / 2.0)
    return out


def general_variance(sample_basis, point_basis):
    """Empirical-moment variance estimate for an arbitrary scaling family.

    ``sample_basis[i, l] = phi_{j,l}(X_i)`` and ``point_basis[l] = phi_{j,l}(t)``::

        (1/n) sum_{l1,l2} [ mean_i(phi_l1 phi_l2)(X_i) - mean_i phi_l1(X_i) mean_i phi_l2(X_i) ]
                          * phi_l1(t) phi_l2(t)
    """
    n = sample_basis.shape[0]
    second = sample_basis.T @ sample_basis / n
    first = sample_basis.mean(axis=0)
    cov = second - np.outer(first, first)
    return float(point_basis @ cov @ point_basis) / n
