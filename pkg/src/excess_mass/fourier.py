"""Cosine series of the excess-mass kernel ``Phi_nu(u) = (|u| - nu)_+`` on ``[-R, R]``.

``Phi_nu`` is even, so only cosine coefficients are kept. They are the
unnormalised inner products ``<cos(pi k . / R), Phi_nu>`` over ``[-R, R]``::

    c_0 = (R - nu)^2 / 2
    c_k = 2 R^2 / (pi k)^2 * (cos(pi k) - cos(pi k nu / R)),   k >= 1

and every coefficient vanishes once ``nu >= R``. Because the basis is not
normalised, the partial sum carries a ``1 / R`` factor::

    A_N Phi_nu(u) = (c_0 + sum_k c_k cos(pi k u / R)) / R

which reduces to the plain sum for ``R = 1``.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FourierCoefficients:
    nu: float
    scale: float
    order: int
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def __len__(self):
        return self.c.size


def _check_finite(**kwargs):
    for name, value in kwargs.items():
        if not np.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value}")


def coefficient_matrix(levels, order, scale=1.0):
    """Coefficients for many levels at once, shape ``(len(levels), order + 1)``."""
    levels = np.asarray(levels, dtype=float)
    if np.any(~np.isfinite(levels)) or np.any(levels < 0):
        raise ValueError("levels must be finite and >= 0")
    k = np.arange(1, order + 1)
    r2 = scale * scale
    out = np.empty((levels.size, order + 1))
    out[:, 0] = (scale - levels) ** 2 / 2.0
    ratio = levels[:, None] / scale
    out[:, 1:] = 2.0 * r2 / (math.pi * k) ** 2 * (np.cos(math.pi * k) - np.cos(math.pi * k * ratio))
    out[levels >= scale] = 0.0
    return out


def coefficients(nu, order, scale=1.0):
    """Return ``c_0(nu), ..., c_N(nu)`` for ``Phi_nu`` on ``[-scale, scale]``."""
    _check_finite(nu=nu, scale=scale)
    if nu < 0:
        raise ValueError("level nu must be >= 0")
    if int(order) != order or order < 1:
        raise ValueError("order must be an integer >= 1")
    if scale <= 0:
        raise ValueError("scale must be > 0")
    c = coefficient_matrix([nu], int(order), scale)[0]
    return FourierCoefficients(float(nu), float(scale), int(order), c)


def exact_phi(u, nu):
    """``(|u| - nu)`` where ``|u| > nu``, else 0."""
    out = np.maximum(np.abs(u) - nu, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def approx_phi(coeffs, u):
    """Partial sum ``(c_0 + sum_k c_k cos(pi k u / R)) / R`` for ``|u| <= R``."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.abs(u_arr) > coeffs.scale):
        raise ValueError(f"|u| must not exceed the scale {coeffs.scale}")
    k = np.arange(coeffs.order + 1)
    # cos is even in u, so evaluating at |u| makes the sum exactly symmetric
    phase = np.multiply.outer(np.abs(u_arr), math.pi * k / coeffs.scale)
    out = (np.cos(phase) @ coeffs.c) / coeffs.scale
    return float(out) if out.ndim == 0 else out


def tail_bound(order, scale=1.0):
    """``4 R^2 / (pi^2 N)``.

    Bounds ``|Phi_nu - A_N Phi_nu|`` on ``[-R, R]`` for ``R >= 1`` (the
    sharp bound is ``4 R / (pi^2 N)``).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    return 4.0 * scale * scale / (math.pi**2 * order)


def numeric_coefficients(phi, order, scale=1.0, points=20000):
    """Cosine coefficients of an arbitrary even ``phi`` on ``[-scale, scale]``.

    Extension point for other integrated functionals ``int phi(f)``; the
    integrals use a midpoint rule with ``points`` cells, so accuracy is
    limited by the smoothness of ``phi``.
    """
    u = -scale + (np.arange(points) + 0.5) * (2.0 * scale / points)
    du = 2.0 * scale / points
    vals = np.asarray(phi(u), dtype=float)
    k = np.arange(order + 1)
    c = (np.cos(np.multiply.outer(math.pi * k / scale, u)) @ vals) * du
    c[0] /= 2.0
    return FourierCoefficients(float("nan"), float(scale), int(order), c)
