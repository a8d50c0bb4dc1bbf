"""Weyl fractional derivatives of the Poisson semigroup in its time variable.

For ``m - 1 <= beta < m`` the Weyl derivative of ``g`` is

    D^beta g(t) = e^{i pi (m - beta)} / Gamma(m - beta)
                  * int_0^inf g^{(m)}(t + s) s^{m - beta - 1} ds.

Applied to ``t -> P_t f`` and combined with the subordination formula, the
quantity ``t^beta D^beta P_t f`` becomes a double integral of heat orbits
``W_{t^2 (1+z)^2 / (4v)} f`` against Hermite weights.  Substituting
``u = t^2 omega`` with ``omega = (1+z)^2 / (4v)`` collapses it to a single
integral

    t^beta D^beta P_t f = e^{-i pi beta} int_0^inf phi(omega) (W_{t^2 omega} f - E f) d omega,

where the weight ``phi`` depends only on ``beta`` (see :func:`weyl_weight`).
The inner ``z``-integral defining ``phi`` is computed once per ``omega`` and
the outer integral is a trapezoid rule in ``log u``, which converges
geometrically because the integrand is analytic and decays at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from ._quad import _jacobi, _legendre
from .laguerre_ops import (
    HeatKernelParams,
    SMALL_T_CUTOFF,
    Variant,
    _apply_axes,
    _check_measure,
    _spectral_gap,
    apply_poisson,
    eigenvalues,
    heat_matrix_axis,
    kernel_resolution,
    spectral_apply_many,
)
from .measure_space import GridFunction
from .special_fn import AlphaIndex, hermite_poly
from .varops import Trajectory

__all__ = [
    "WeylOrder",
    "TimeGrid",
    "weyl_phase",
    "weyl_weight",
    "weyl_weight_matrix",
    "weyl_poisson_trajectory",
    "weyl_poisson_spectral_profile",
    "weyl_scalar",
]

OMEGA_MIN = 1.0 / 200.0
DECAY_SPAN = 60.0


@dataclass(frozen=True)
class WeylOrder:
    """Order ``beta >= 0`` with ``m = floor(beta) + 1``."""

    beta: float

    def __post_init__(self):
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def m(self) -> int:
        return int(math.floor(self.beta)) + 1

    @property
    def is_identity(self) -> bool:
        return self.beta == 0.0


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly decreasing positive times ``t_1 > ... > t_N`` (N >= 2)."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        if t.size < 2:
            raise ValueError("a time grid needs at least two times")
        if np.any(t <= 0) or np.any(~np.isfinite(t)):
            raise ValueError("times must be positive and finite")
        if np.any(np.diff(t) >= 0):
            raise ValueError("times must be strictly decreasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def geometric(cls, t_min: float = 1e-3, t_max: float = 20.0, N: int = 160) -> "TimeGrid":
        if not (0 < t_min < t_max):
            raise ValueError("need 0 < t_min < t_max")
        return cls(np.geomspace(t_max, t_min, N))

    def __len__(self) -> int:
        return self.times.size

    def __iter__(self):
        return iter(self.times)

    @property
    def log_step(self) -> float | None:
        """Constant step in ``log t`` if the grid is geometric, else ``None``."""
        d = -np.diff(np.log(self.times))
        if np.allclose(d, d[0], rtol=1e-9, atol=0.0):
            return float(d.mean())
        return None


def weyl_phase(beta: float) -> complex:
    """``e^{-i pi beta}`` with exact values at multiples of 1/2."""
    r = math.fmod(beta, 2.0)
    exact = {0.0: 1.0 + 0j, 0.5: -1j, 1.0: -1.0 + 0j, 1.5: 1j}
    if r in exact:
        return exact[r]
    return complex(math.cos(math.pi * beta), -math.sin(math.pi * beta))


# ---------------------------------------------------------------------------
# the weight phi
# ---------------------------------------------------------------------------


def weyl_weight(beta: float, omega, n_jacobi: int = 40, width: float = 0.1, order: int = 12, chunk: int = 256):
    """Weight ``phi_beta(omega)`` such that ``int phi(omega) e^{-tau omega} d omega = tau^{beta/2} e^{-sqrt(tau)}``.

    ``phi(omega) = 1/(2 sqrt(pi) Gamma(m-beta) omega) int_0^inf z^{m-beta-1}
    (1+z)^{-m} e^{-v} v^{m/2} H_{m+1}(sqrt v) dz`` with ``v = (1+z)^2/(4 omega)``.
    The ``z``-integral uses Gauss-Jacobi on ``[0, a]`` (absorbing the
    ``z^{m-beta-1}`` singularity) followed by Gauss-Legendre panels in
    ``log z`` out to where ``e^{-v}`` is negligible.  Below ``omega = 1/200``
    the weight is below ``e^{-50}`` and is set to zero.
    """
    wo = WeylOrder(beta)
    if wo.is_identity:
        raise ValueError("the weight is defined for beta > 0")
    m = wo.m
    gam = m - wo.beta - 1.0
    omega = np.asarray(omega, dtype=float)
    flat = omega.ravel()
    out = np.zeros(flat.size)
    live = np.flatnonzero(flat >= OMEGA_MIN)
    xj, wj = _jacobi(n_jacobi, 0.0, gam)
    xl, wl = _legendre(order)
    norm = 1.0 / (2.0 * math.sqrt(math.pi) * math.exp(gammaln(m - wo.beta)))
    for start in range(0, live.size, chunk):
        sel = live[start : start + chunk]
        om = flat[sel]
        a = np.minimum(1.0, 2.0 * om)
        zmax = np.maximum(2.0 * a, 2.0 * np.sqrt(240.0 * om) + 2.0)
        # Gauss-Jacobi part
        zj = 0.5 * a[:, None] * (xj[None, :] + 1.0)
        wjj = wj[None, :] * (0.5 * a[:, None]) ** (gam + 1.0)
        # log-z panels; every row uses the same panel count
        span = np.log(zmax / a)
        npan = max(1, int(math.ceil(span.max() / width)))
        pw = span / npan
        lo = np.log(a)[:, None] + pw[:, None] * np.arange(npan)[None, :]
        s = (lo[:, :, None] + 0.5 * pw[:, None, None] * (xl[None, None, :] + 1.0)).reshape(len(om), -1)
        zl = np.exp(s)
        wll = np.broadcast_to(0.5 * pw[:, None, None] * wl[None, None, :], (len(om), npan, order))
        wll = wll.reshape(len(om), -1) * zl ** (gam + 1.0)
        z = np.concatenate([zj, zl], axis=1)
        w = np.concatenate([wjj, wll], axis=1)
        v = (1.0 + z) ** 2 / (4.0 * om[:, None])
        with np.errstate(under="ignore"):
            integrand = (1.0 + z) ** (-m) * np.exp(-v) * v ** (m / 2.0) * hermite_poly(m + 1, np.sqrt(v))
        out[sel] = norm * np.sum(w * integrand, axis=1) / om
    return out.reshape(omega.shape)


def weyl_weight_matrix(beta: float, times: TimeGrid, gap: float, h_target: float = 0.05):
    """Heat times ``u_i`` and weights ``A[j, i]`` with
    ``t_j^beta D^beta P_{t_j} = e^{-i pi beta} sum_i A[j, i] (W_{u_i} - E)``.

    The ``u``-grid is uniform in ``log u`` and spans ``[t_min^2/200,
    60/gap]``.  On geometric time grids the step is adjusted so that
    ``log(u_i / t_j^2)`` falls on a common lattice and ``phi`` is evaluated
    once per lattice point.
    """
    t = times.times
    s_lo = math.log(t.min() ** 2 * OMEGA_MIN)
    s_hi = math.log(DECAY_SPAN / gap)
    if s_lo >= s_hi:
        return np.empty(0), np.zeros((t.size, 0))
    step = times.log_step
    h = h_target
    if step is not None:
        h = 2.0 * step / math.ceil(2.0 * step / h_target)
    count = int(math.ceil((s_hi - s_lo) / h)) + 1
    sigma = s_hi - h * np.arange(count)
    logw = sigma[None, :] - 2.0 * np.log(t)[:, None]
    live = logw >= math.log(OMEGA_MIN)
    key = np.round(logw[live] / h, 6)
    uniq, first, inv = np.unique(key, return_index=True, return_inverse=True)
    om = np.exp(logw[live][first])
    phi = weyl_weight(beta, om)
    A = np.zeros(logw.shape)
    A[live] = h * (phi * om)[inv]
    return np.exp(sigma), A


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


def weyl_poisson_spectral_profile(beta: float, t, lam):
    """Closed form ``e^{-i pi beta} (t sqrt(lam))^beta e^{-t sqrt(lam)}`` (0 at lam = 0)."""
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    u = np.multiply.outer(t, np.sqrt(lam))
    with np.errstate(divide="ignore"):
        prof = np.where(u > 0, np.exp(beta * np.log(np.where(u > 0, u, 1.0)) - u), 0.0)
    return weyl_phase(beta) * prof


def weyl_poisson_trajectory(
    f: GridFunction,
    order: WeylOrder,
    times: TimeGrid,
    alpha=None,
    variant=Variant.W,
    heat: str = "auto",
    trunc=None,
    h_target: float = 0.05,
) -> Trajectory:
    """``t -> t^beta D^beta P_t f`` sampled on ``times`` at every grid node.

    ``heat`` selects how the heat orbits are applied: ``"kernel"``,
    ``"spectral"`` or ``"auto"`` (kernel where the grid resolves it).  For
    ``beta = 0`` the Poisson semigroup itself is returned.
    """
    order = order if isinstance(order, WeylOrder) else WeylOrder(order)
    times = times if isinstance(times, TimeGrid) else TimeGrid(times)
    variant = Variant(variant)
    alpha = f.grid.alpha if alpha is None else (alpha if isinstance(alpha, AlphaIndex) else AlphaIndex(alpha))
    if f.grid.alpha != alpha:
        raise ValueError("alpha does not match the grid")
    _check_measure(f.grid, variant)

    if order.is_identity:
        vals = np.stack([apply_poisson(f, alpha, float(t), variant, heat=heat, trunc=trunc).values for t in times])
        return Trajectory(times.times, vals, f.grid, {"beta": 0.0, "variant": variant.value})

    beta = order.beta
    gap = _spectral_gap(alpha, variant)
    u, A = weyl_weight_matrix(beta, times, gap, h_target)
    phase = weyl_phase(beta)
    if variant is Variant.W_DELTA:
        g = f
    else:
        g = f.with_values(f.values - np.sum(f.grid.weights * f.values))
    out = np.zeros((len(times), f.grid.size), dtype=complex)
    if u.size:
        if heat == "spectral":
            use_kernel = np.zeros(u.size, dtype=bool)
        elif heat == "kernel":
            use_kernel = u >= SMALL_T_CUTOFF
        elif heat == "auto":
            use_kernel = u >= kernel_resolution(f.grid)
        else:
            raise ValueError(f"unknown heat route {heat!r}")
        sp = ~use_kernel
        if heat == "kernel":
            # below the kernel cutoff the heat orbit is the identity
            out += np.sum(A[:, sp], axis=1)[:, None] * g.values[None, :]
        elif np.any(sp):
            usp, Asp = u[sp], A[:, sp]

            def mult(ks):
                lam = eigenvalues(alpha, variant, ks)
                return Asp @ np.exp(-np.multiply.outer(usp, lam)) * (lam > 0)[None, :]

            out += spectral_apply_many(g, mult, trunc)
        if np.any(use_kernel):
            tens = g.tensor()
            orbits = np.empty((int(use_kernel.sum()), f.grid.size), dtype=complex)
            for r, ui in enumerate(u[use_kernel]):
                mats = [heat_matrix_axis(f.grid, i, float(ui), variant) for i in range(f.grid.n)]
                orbits[r] = _apply_axes(tens, mats).ravel()
            out += A[:, use_kernel] @ orbits
    out *= phase
    info = {"beta": beta, "variant": variant.value, "heat": heat, "n_heat_times": int(u.size)}
    return Trajectory(times.times, out, f.grid, info)


# ---------------------------------------------------------------------------
# scalar oracle
# ---------------------------------------------------------------------------


def weyl_scalar(g_m, order: WeylOrder, t: float, rtol: float = 1e-12) -> complex:
    """``D^beta g(t)`` from the defining integral, given ``g^{(m)}``.

    The substitution ``s = t z`` turns the integral into
    ``t^{m-beta} int_0^inf g^{(m)}(t(1+z)) z^{m-beta-1} dz``; the
    singular piece on ``[0, 1]`` uses QUADPACK's algebraic weight.  A decay
    probe rejects integrands whose weighted tail does not decrease.
    """
    order = order if isinstance(order, WeylOrder) else WeylOrder(order)
    if not t > 0:
        raise ValueError("t must be positive")
    beta = order.beta
    if order.is_identity:
        raise ValueError("beta = 0 needs g itself, not a derivative")
    m = order.m
    gam = m - beta - 1.0

    def h(z):
        return complex(g_m(t * (1.0 + z)))

    probe = [abs(h(z)) * z ** (gam + 1.0) for z in (1e3, 1e5, 1e7)]
    if probe[2] > 0 and not (probe[2] < probe[1] <= probe[0] or probe[2] < 1e-300):
        raise ValueError("integrand does not decay fast enough for the Weyl integral to converge")

    def part(fn):
        re = integrate.quad(lambda z: fn(z).real, 0.0, 1.0, weight="alg", wvar=(gam, 0.0), epsabs=1e-15, epsrel=rtol, limit=200)[0]
        im = integrate.quad(lambda z: fn(z).imag, 0.0, 1.0, weight="alg", wvar=(gam, 0.0), epsabs=1e-15, epsrel=rtol, limit=200)[0]
        return re + 1j * im

    def tail(fn):
        re = integrate.quad(lambda z: fn(z).real * z**gam, 1.0, np.inf, epsabs=1e-15, epsrel=rtol, limit=400)[0]
        im = integrate.quad(lambda z: fn(z).imag * z**gam, 1.0, np.inf, epsabs=1e-15, epsrel=rtol, limit=400)[0]
        return re + 1j * im

    total = part(h) + tail(h)
    pref = t ** (m - beta) / math.exp(gammaln(m - beta))
    # e^{i pi (m - beta)} = (-1)^m e^{-i pi beta}
    sign = 1.0 if m % 2 == 0 else -1.0
    return sign * weyl_phase(beta) * pref * total
