"""Laguerre, Hermite and modified Bessel functions.

The Bessel routine works in log space throughout: kernels of the Laguerre
heat semigroup multiply ``exp(-large)`` by ``I_nu(large)`` and neither factor
is representable on its own once the time parameter gets small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

__all__ = [
    "LogValue",
    "AlphaIndex",
    "laguerre_poly",
    "laguerre_poly_normalized",
    "laguerre_table",
    "laguerre_norm_log",
    "hermite_poly",
    "bessel_i_scaled",
    "log_bessel_ive",
    "log_bessel_ive_series",
    "log_bessel_ive_asymptotic",
    "bessel_crossover",
]


# ---------------------------------------------------------------------------
# small value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogValue:
    """A real number stored as ``sign * exp(log_mag)``.

    ``sign`` is one of -1, 0, +1; ``log_mag`` is ignored when the sign is 0.
    """

    sign: int
    log_mag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")

    @classmethod
    def from_float(cls, value: float) -> "LogValue":
        if value == 0.0:
            return cls(0, -math.inf)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(0, -math.inf)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    __float__ = to_float

    def __mul__(self, other: "LogValue") -> "LogValue":
        if not isinstance(other, LogValue):
            other = LogValue.from_float(float(other))
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_mag + other.log_mag)

    __rmul__ = __mul__

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if not isinstance(other, LogValue):
            other = LogValue.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_mag - other.log_mag)

    def __neg__(self) -> "LogValue":
        return LogValue(-self.sign, self.log_mag)

    def __abs__(self) -> "LogValue":
        return LogValue(abs(self.sign), self.log_mag)


@dataclass(frozen=True)
class AlphaIndex:
    """Multi-index ``alpha`` in ``(0, inf)^n``."""

    alpha: tuple

    def __init__(self, alpha: float | Sequence[float]):
        values = tuple(float(a) for a in np.atleast_1d(alpha))
        if len(values) == 0:
            raise ValueError("alpha must have at least one component")
        if any(not np.isfinite(a) or a <= 0.0 for a in values):
            raise ValueError(f"every component of alpha must be > 0, got {values}")
        object.__setattr__(self, "alpha", values)

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def sum_alpha(self) -> float:
        return float(sum(self.alpha))

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.alpha)

    def __getitem__(self, i):
        return self.alpha[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    def lam(self, k) -> np.ndarray | int:
        """Eigenvalue ``|k| = k_1 + ... + k_n`` of the Laguerre operator."""
        k = np.asarray(k)
        return k.sum(axis=-1)

    def lam_delta(self, k):
        """Eigenvalue ``2|k| + sum(alpha) + n`` of the Laguerre-Bessel operator."""
        k = np.asarray(k)
        return 2 * k.sum(axis=-1) + self.sum_alpha + self.n

    def to_list(self) -> list:
        return list(self.alpha)


# ---------------------------------------------------------------------------
# orthogonal polynomials
# ---------------------------------------------------------------------------


def laguerre_table(kmax: int, a: float, x) -> np.ndarray:
    """Return ``L_k^a(x)`` for ``k = 0..kmax`` stacked along axis 0."""
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = a + 1.0 - x
    for k in range(1, kmax):
        out[k + 1] = ((2 * k + a + 1.0 - x) * out[k] - (k + a) * out[k - 1]) / (k + 1)
    return out


def laguerre_poly(k: int, a: float, x):
    """Generalized Laguerre polynomial ``L_k^a(x)`` by the three-term recurrence."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if a <= -1:
        raise ValueError("parameter a must exceed -1")
    val = laguerre_table(k, a, x)[k]
    return float(val) if np.ndim(val) == 0 else val


def laguerre_norm_log(k, a: float):
    """``log sqrt(Gamma(k+1) Gamma(a+1) / Gamma(k+a+1))``."""
    k = np.asarray(k, dtype=float)
    return 0.5 * (gammaln(k + 1.0) + gammaln(a + 1.0) - gammaln(k + a + 1.0))


def laguerre_poly_normalized(k: int, a: float, x):
    """Laguerre polynomial normalized in ``L^2`` of ``x^a e^{-x} dx / Gamma(a+1)``."""
    val = laguerre_poly(k, a, x) * np.exp(laguerre_norm_log(k, a))
    return float(val) if np.ndim(val) == 0 else val


def hermite_poly(m: int, x):
    """Physicists' Hermite polynomial ``H_m(x)``."""
    if m < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if m == 0:
        return float(h_prev) if x.ndim == 0 else h_prev
    h = 2.0 * x
    for j in range(1, m):
        h_prev, h = h, 2.0 * x * h - 2.0 * j * h_prev
    return float(h) if x.ndim == 0 else h


# ---------------------------------------------------------------------------
# modified Bessel function of the first kind
# ---------------------------------------------------------------------------

_RESCALE = 2.0**600
_LOG_RESCALE = 600.0 * math.log(2.0)


def bessel_crossover(nu) -> np.ndarray:
    """Argument above which the asymptotic expansion is used."""
    nu = np.asarray(nu, dtype=float)
    return np.maximum(25.0, nu * nu)


def log_bessel_ive_series(nu, z) -> np.ndarray:
    """``log(I_nu(z)) - z`` from the ascending series (z > 0)."""
    nu, z = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    nu = nu.astype(float)
    z = z.astype(float)
    shape = z.shape
    nu = nu.ravel()
    z = z.ravel()
    q = 0.25 * z * z
    total = np.ones_like(z)
    term = np.ones_like(z)
    offset = np.zeros_like(z)
    k = 0
    # terms grow until k(k+nu) ~ q and then decay geometrically
    kpeak = np.sqrt(q + 0.25 * nu * nu) - 0.5 * nu
    while True:
        k += 1
        term = term * (q / (k * (k + nu)))
        total = total + term
        big = total > _RESCALE
        if np.any(big):
            total = np.where(big, total / _RESCALE, total)
            term = np.where(big, term / _RESCALE, term)
            offset = offset + np.where(big, _LOG_RESCALE, 0.0)
        if k > 2 and np.all((term < 1e-17 * total) & (k > kpeak)):
            break
        if k > 100000:
            raise RuntimeError("Bessel series did not converge")
    with np.errstate(divide="ignore"):
        log_i = nu * np.log(0.5 * z) - gammaln(nu + 1.0) + np.log(total) + offset
    return (log_i - z).reshape(shape)


def log_bessel_ive_asymptotic(nu, z) -> np.ndarray:
    """``log(I_nu(z)) - z`` from the large-argument expansion.

    The divergent series ``sum (-1)^k a_k(nu) / z^k`` is summed until its
    terms stop decreasing.
    """
    nu, z = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    shape = z.shape
    nu = nu.ravel().astype(float)
    z = z.ravel().astype(float)
    mu = 4.0 * nu * nu
    total = np.ones_like(z)
    term = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 200):
        new = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        active &= np.abs(new) < np.abs(term)
        term = np.where(active, new, term)
        total = total + np.where(active, new, 0.0)
        active &= np.abs(new) > 1e-17 * np.abs(total)
        if not active.any():
            break
    return (-0.5 * np.log(2.0 * math.pi * z) + np.log(total)).reshape(shape)


def log_bessel_ive(nu, z) -> np.ndarray:
    """Vectorized ``log(I_nu(z)) - z`` for ``nu > -1`` and ``z >= 0``.

    At ``z = 0`` the value is ``0`` for ``nu = 0`` and ``-inf`` for ``nu > 0``.
    """
    nu, z = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    if np.any(nu <= -1):
        raise ValueError("order must satisfy nu > -1")
    if np.any(z < 0) or np.any(~np.isfinite(z)):
        raise ValueError("argument must be finite and nonnegative")
    out = np.empty(z.shape)
    zero = z == 0
    cross = bessel_crossover(nu)
    small = (~zero) & (z <= cross)
    large = (~zero) & ~small
    if small.any():
        out[small] = log_bessel_ive_series(nu[small], z[small])
    if large.any():
        out[large] = log_bessel_ive_asymptotic(nu[large], z[large])
    if zero.any():
        nz = nu[zero]
        out[zero] = np.where(nz == 0, 0.0, np.where(nz > 0, -np.inf, np.inf))
    return out


def bessel_i_scaled(nu: float, z: float) -> LogValue:
    """``I_nu(z)`` as a :class:`LogValue` (assembled from the scaled log)."""
    if z < 0:
        raise ValueError("argument must be nonnegative")
    if nu <= -1:
        raise ValueError("order must satisfy nu > -1")
    if z == 0:
        if nu == 0:
            return LogValue(1, 0.0)
        if nu > 0:
            return LogValue.zero()
        return LogValue(1, math.inf)
    return LogValue(1, float(log_bessel_ive(nu, z)) + z)
