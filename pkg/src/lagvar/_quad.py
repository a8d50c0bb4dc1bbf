"""Reusable 1-D quadrature rules.

The node generators themselves come from :mod:`scipy.special`; this module
only maps and composes them.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_genlaguerre, roots_jacobi, roots_legendre


@lru_cache(maxsize=64)
def _legendre(n: int):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=256)
def _jacobi(n: int, a: float, b: float):
    x, w = roots_jacobi(n, a, b)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def gauss_laguerre_probability(n: int, a: float):
    """Gauss rule for ``x^a e^{-x} dx / Gamma(a+1)`` (weights sum to one)."""
    x, w = roots_genlaguerre(n, a)
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_legendre(a: float, b: float, width: float, order: int = 12):
    """Composite Gauss-Legendre rule on ``[a, b]`` with panels of at most ``width``."""
    if b <= a:
        return np.empty(0), np.empty(0)
    npan = max(1, int(np.ceil((b - a) / width)))
    edges = np.linspace(a, b, npan + 1)
    x, w = _legendre(order)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def log_panels(lo: float, hi: float, width: float, order: int = 12):
    """Rule for ``int_lo^hi g(u) du`` using panels in ``log u``.

    Returns nodes ``u`` and weights that already include the Jacobian ``u``.
    """
    s, w = composite_legendre(np.log(lo), np.log(hi), width, order)
    u = np.exp(s)
    return u, w * u


def jacobi_power(a: float, gamma: float, n: int):
    """Gauss rule for ``int_0^a z^gamma g(z) dz`` (weight included)."""
    x, w = _jacobi(n, 0.0, float(gamma))
    z = 0.5 * a * (x + 1.0)
    return z, w * (0.5 * a) ** (gamma + 1.0)


def jacobi_symmetric(n: int, a: float):
    """Gauss-Jacobi rule for ``(1 - s^2)^(a - 1/2)`` on ``(-1, 1)``."""
    return _jacobi(n, a - 0.5, a - 0.5)


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    if n > 1:
        w[0] = w[-1] = 0.5 * h
    return w
