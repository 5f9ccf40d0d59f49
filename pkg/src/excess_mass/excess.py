"""Excess-mass estimators.

The functional estimators integrate a truncated cosine expansion of
``Phi_nu(u) = (|u| - nu)_+`` evaluated at a density estimate::

    E_hat(nu) = (1/R) sum_{k=0..N} c_k(nu) int_K exp(pi^2 k^2 var(x) / (2 R^2)) cos(pi k f(x) / R) dx

with ``var`` a pointwise variance estimate of ``f`` (zero for the bootstrap-mean
variant). Only ``c_k(nu)`` depends on the level, so the integrals ``S_k`` are
computed once per fit and reused across a whole level grid.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .curves import ExcessMassCurve
from .fourier import coefficients
from .wavelet import HAAR_GAMMA

SCALE_MARGIN = 1.05
EXPONENT_CAP = 50.0


class OverflowGuardError(ArithmeticError):
    """The debiasing exponent cannot be kept bounded even at order 1."""


def choose_scale(values):
    """``R = max(1, 1.05 * sup f)`` so that the estimate stays inside ``[-R, R]``."""
    top = float(np.max(values)) if np.size(values) else 0.0
    return max(1.0, SCALE_MARGIN * top)


def guarded_order(order, variances, scale):
    """Largest order ``<= order`` whose exponent ``pi^2 N^2 sup(var) / (2 R^2)`` stays
    below the cap; warns when it had to shrink."""
    top = float(np.max(variances)) if np.size(variances) else 0.0
    if top <= 0:
        return order
    if math.pi**2 * order**2 * top / (2.0 * scale**2) <= EXPONENT_CAP:
        return order
    allowed = int(math.floor(math.sqrt(2.0 * EXPONENT_CAP * scale**2 / (math.pi**2 * top))))
    if allowed < 1:
        raise OverflowGuardError(
            f"variance {top:.3g} too large for a bounded debiasing factor at any order"
        )
    warnings.warn(f"Fourier order reduced from {order} to {allowed} to bound exp factor",
                  stacklevel=3)
    return allowed


@dataclass(frozen=True)
class FunctionalSums:
    """Level-independent integrals ``S_k`` of a functional estimator."""

    sums: np.ndarray
    order: int
    scale: float
    method: str = ""
    params: dict = field(default_factory=dict)

    def value(self, nu):
        if nu >= self.scale:
            return 0.0
        c = coefficients(nu, self.order, self.scale).c
        return float(np.dot(c, self.sums)) / self.scale

    def curve(self, levels, clamp=False):
        levels = np.asarray(levels, dtype=float)
        values = np.array([self.value(nu) for nu in levels])
        params = {"order": self.order, "scale": self.scale, **self.params}
        out = ExcessMassCurve(levels, values, self.method, params)
        return out.clamped() if clamp else out


def functional_sums(values, grid, order, variances=None, scale=None, method="", params=None):
    """Compute ``S_k`` for ``k = 0..order`` from grid values of a density estimate.

    ``variances`` (same shape as ``values``) enables the exponential debiasing
    factor; ``scale`` defaults to :func:`choose_scale`.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size != grid.size:
        raise ValueError("values must hold one entry per grid point")
    if int(order) != order or order < 1:
        raise ValueError("order must be an integer >= 1")
    order = int(order)
    scale = choose_scale(values) if scale is None else float(scale)
    if np.max(np.abs(values)) > scale:
        raise ValueError("density estimate exceeds the Fourier scale")
    k = np.arange(order + 1)
    phase = np.multiply.outer(math.pi * k / scale, values)
    terms = np.cos(phase)
    if variances is not None:
        variances = np.asarray(variances, dtype=float).ravel()
        if np.any(variances < 0):
            raise ValueError("variances must be >= 0")
        order = guarded_order(order, variances, scale)
        k = k[: order + 1]
        terms = terms[: order + 1]
        terms = terms * np.exp(np.multiply.outer((math.pi * k / scale) ** 2 / 2.0, variances))
    sums = grid.integrate(terms, axis=1)
    return FunctionalSums(sums, order, scale, method, dict(params or {}))


def estimate_functional(values, nu, order, grid, variances=None, scale=None):
    """Single-level functional estimate from grid values (and optional variances)."""
    return functional_sums(values, grid, order, variances, scale).value(nu)


def wavelet_sums(est, order, grid, gamma=HAAR_GAMMA, scale=None):
    values = est.evaluate(grid.points)
    _, truncated = est.variance(grid.points, gamma)
    return functional_sums(values, grid, order, truncated, scale, method="wavelet",
                           params={"level": est.level})


def estimate_wavelet(est, nu, order, grid, gamma=HAAR_GAMMA, scale=None):
    """Haar-based functional estimate with truncated empirical variance."""
    return wavelet_sums(est, order, grid, gamma, scale).value(nu)


def _moment_grid(moments, grid):
    if grid is not None and grid is not moments.grid and grid != moments.grid:
        raise ValueError("moments were computed on a different grid")
    return moments.grid


def kernel_corrected_sums(moments, order, grid=None, scale=None):
    grid = _moment_grid(moments, grid)
    return functional_sums(moments.fhat, grid, order, moments.var_hat, scale,
                           method="corrected",
                           params={"bandwidth": moments.bandwidth.tolist()})


def estimate_kernel_corrected(moments, nu, order, grid=None, scale=None):
    """Full-sample kernel estimate with bootstrap-variance debiasing factor."""
    return kernel_corrected_sums(moments, order, grid, scale).value(nu)


def kernel_mean_sums(moments, order, grid=None, scale=None):
    grid = _moment_grid(moments, grid)
    return functional_sums(moments.mean_hat, grid, order, None, scale,
                           method="functional",
                           params={"bandwidth": moments.bandwidth.tolist()})


def estimate_kernel_mean(moments, nu, order, grid=None, scale=None):
    """Cosine expansion evaluated at the bootstrap mean of the kernel estimate."""
    return kernel_mean_sums(moments, order, grid, scale).value(nu)


def _grid_values(model_or_values, grid):
    if hasattr(model_or_values, "on_grid"):
        return model_or_values.on_grid(grid)
    values = np.asarray(model_or_values, dtype=float).ravel()
    if values.size != grid.size:
        raise ValueError("values must hold one entry per grid point")
    return values


def estimate_plugin(model, nu, grid):
    """``int (f_hat(x) - nu)_+ dx`` by the midpoint rule; ``model`` may be a
    kernel model or precomputed grid values."""
    values = _grid_values(model, grid)
    return float(grid.integrate(np.maximum(values - nu, 0.0)))


def plugin_curve(model, levels, grid, params=None):
    values = _grid_values(model, grid)
    levels = np.asarray(levels, dtype=float)
    out = [float(grid.integrate(np.maximum(values - nu, 0.0))) for nu in levels]
    if params is None and hasattr(model, "bandwidth"):
        params = {"bandwidth": np.asarray(model.bandwidth).tolist()}
    return ExcessMassCurve(levels, out, "plugin", dict(params or {}))


def curve(estimator, levels, method="", params=None):
    """Apply a one-argument estimator ``nu -> value`` along ascending ``levels``.

    ``FunctionalSums`` objects are accepted directly and reuse their
    precomputed integrals.
    """
    if isinstance(estimator, FunctionalSums):
        return estimator.curve(levels)
    levels = np.asarray(levels, dtype=float)
    if np.any(np.diff(levels) < 0):
        raise ValueError("levels must be ascending")
    return ExcessMassCurve(levels, [estimator(nu) for nu in levels], method, dict(params or {}))
