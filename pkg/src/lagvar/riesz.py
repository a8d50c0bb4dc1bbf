"""Riesz transforms of the Laguerre-Bessel operator and their kernel estimates.

The Riesz kernel in the ``nu_alpha`` setting is

    R^i(x, y) = pi^{-1/2} int_0^inf d/dx_i W_t(x, y) t^{-1/2} dt,

with ``W_t`` the ``W_DELTA`` heat kernel.  The derivative is analytic: for one
coordinate factor ``d/dx log W = -2 r x/(1-r) + 2 sqrt(r) y/(1-r) I_{a+1}(z)/I_a(z)``
with ``r = e^{-2t}``.

The module also provides the local/global split of ``(x, y, s)``-space used
in the kernel estimates: the quadratic forms ``q_+-``, the local region
``N_tau``, a smooth cutoff ``phi``, the Jacobi weight ``Pi_alpha``, the global
majorant ``K_alpha``, and numerical sweeps that estimate the constants in the
local Calderon-Zygmund bounds.
"""

from __future__ import annotations

import enum
import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, ive

from ._quad import _jacobi, _legendre, composite_legendre
from .laguerre_ops import log_heat_kernel_axis
from .measure_space import GridFunction, MeasureTag, QuadGrid, ball_measure_m_alpha
from .special_fn import AlphaIndex, log_bessel_ive
from .varops import Trajectory

__all__ = [
    "Setting",
    "SplitGeometry",
    "CutoffPhi",
    "JacobiWeight",
    "Resolution",
    "riesz_kernel",
    "riesz_integrand",
    "riesz_matrix",
    "truncated_riesz",
    "truncation_trajectory",
    "breakpoint_grid",
    "conjugated_riesz_kernel",
    "conjugation_factor",
    "global_kernel_K",
    "log_g_profile",
    "sup_g",
    "local_riesz_kernel_s",
    "local_riesz_kernel_pair",
    "poisson_local_variation",
    "poisson_pair_variation",
    "sample_local_triples",
    "sample_local_pairs",
    "sample_global_triples",
    "verify_local_bounds",
    "verify_global_domination",
]


def _alpha(alpha) -> AlphaIndex:
    return alpha if isinstance(alpha, AlphaIndex) else AlphaIndex(alpha)


def _points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != n:
        raise ValueError(f"points must have last dimension {n}")
    return x


# ---------------------------------------------------------------------------
# geometry of the local/global split
# ---------------------------------------------------------------------------


class Setting(enum.Enum):
    POISSON_VAR = "POISSON_VAR"
    RIESZ = "RIESZ"


@dataclass(frozen=True)
class SplitGeometry:
    """Quadratic forms ``q_+-`` and the local region ``N_tau``."""

    alpha: AlphaIndex
    tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha(self.alpha))
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def C0(self) -> float:
        return 9.0 * (self.alpha.n + self.alpha.sum_alpha)

    def q_minus(self, x, y, s) -> np.ndarray:
        n = self.alpha.n
        x, y, s = _points(x, n), _points(y, n), _points(s, n)
        return np.sum(x * x + y * y - 2.0 * x * y * s, axis=-1)

    def q_plus(self, x, y, s) -> np.ndarray:
        n = self.alpha.n
        x, y, s = _points(x, n), _points(y, n), _points(s, n)
        return np.sum(x * x + y * y + 2.0 * x * y * s, axis=-1)

    def radius(self, x, y) -> np.ndarray:
        """``C0 tau / (1 + |x| + |y|)``: the bound on ``q_-^{1/2}`` in ``N_tau``."""
        n = self.alpha.n
        x, y = _points(x, n), _points(y, n)
        return self.C0 * self.tau / (1.0 + np.linalg.norm(x, axis=-1) + np.linalg.norm(y, axis=-1))

    def contains(self, x, y, s) -> np.ndarray:
        return np.sqrt(self.q_minus(x, y, s)) <= self.radius(x, y)


def _psi(r):
    """Quintic smoothstep: 1 on [0,1], 0 on [2,inf), C^2 in between."""
    r = np.asarray(r, dtype=float)
    u = np.clip(r - 1.0, 0.0, 1.0)
    return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


@dataclass(frozen=True)
class CutoffPhi:
    """``phi(x, y, s) = psi(q_-^{1/2} (1 + |x| + |y|) / C0)``."""

    alpha: AlphaIndex

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha(self.alpha))

    @property
    def geometry(self) -> SplitGeometry:
        return SplitGeometry(self.alpha, 1.0)

    def argument(self, x, y, s) -> np.ndarray:
        g = self.geometry
        return np.sqrt(np.maximum(g.q_minus(x, y, s), 0.0)) / g.radius(x, y)

    def __call__(self, x, y, s) -> np.ndarray:
        return _psi(self.argument(x, y, s))

    psi = staticmethod(_psi)

    def gradient_norm(self, x, y, s, h: float = 1e-6) -> np.ndarray:
        """``|grad_x phi| + |grad_y phi|`` by central differences."""
        n = self.alpha.n
        x, y, s = _points(x, n), _points(y, n), _points(s, n)
        gx = np.zeros(x.shape)
        gy = np.zeros(y.shape)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            gx[..., i] = (self(x + e, y, s) - self(x - e, y, s)) / (2 * h)
            gy[..., i] = (self(x, y + e, s) - self(x, y - e, s)) / (2 * h)
        return np.linalg.norm(gx, axis=-1) + np.linalg.norm(gy, axis=-1)


@dataclass(frozen=True)
class JacobiWeight:
    """Normalized weight ``Pi_alpha(s)`` on ``(-1, 1)^n``."""

    alpha: AlphaIndex

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha(self.alpha))

    def log_density(self, s) -> np.ndarray:
        s = _points(s, self.alpha.n)
        out = 0.0
        for i, a in enumerate(self.alpha):
            out = out + (
                gammaln(a + 1.0) - gammaln(a + 0.5) - 0.5 * math.log(math.pi) + (a - 0.5) * np.log1p(-s[..., i] ** 2)
            )
        return out

    def density(self, s) -> np.ndarray:
        return np.exp(self.log_density(s))

    def rule(self, size: int):
        """Tensor Gauss-Jacobi nodes ``(M, n)`` and weights ``(M,)`` summing to one."""
        axes = []
        for a in self.alpha:
            x, w = _jacobi(size, a - 0.5, a - 0.5)
            axes.append((x, w / w.sum()))
        grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
        wts = np.ones(grids[0].shape)
        for k, (_, w) in enumerate(axes):
            shape = [1] * len(axes)
            shape[k] = w.size
            wts = wts * w.reshape(shape)
        return np.stack([g.ravel() for g in grids], axis=-1), wts.ravel()


def global_kernel_K(x, y, s, alpha, setting=Setting.POISSON_VAR, log: bool = False):
    """The global majorant ``K_alpha(x, y, s)`` (log value with ``log=True``)."""
    alpha = _alpha(alpha)
    setting = Setting(setting)
    geo = SplitGeometry(alpha)
    x, y, s = _points(x, alpha.n), _points(y, alpha.n), _points(s, alpha.n)
    qm = geo.q_minus(x, y, s)
    qp = geo.q_plus(x, y, s)
    sxy = np.sum(s * x * y, axis=-1)
    N = alpha.n + alpha.sum_alpha
    x2 = np.sum(x * x, axis=-1)
    y2 = np.sum(y * y, axis=-1)
    if setting is Setting.RIESZ:
        first = sxy <= 0
        base = np.zeros(np.shape(qm))
        expo = (x2 + y2) / 2.0
    else:
        first = sxy < 0
        base = -y2
        expo = -(y2 - x2) / 2.0
    second = ~first
    if np.any(second & (qm <= 0)):
        raise ValueError("q_- vanishes on the second branch of K_alpha")
    with np.errstate(divide="ignore", invalid="ignore"):
        val2 = 0.5 * N * (np.log(qp) - np.log(qm)) + expo - 0.5 * np.sqrt(qp * qm)
    out = np.where(first, base, val2)
    out = out if np.ndim(out) else float(out)
    return out if log else np.exp(out)


# ---------------------------------------------------------------------------
# Riesz kernel
# ---------------------------------------------------------------------------


def _log_factor_and_dlog(a: float, t, x, y):
    """``log W_DELTA`` factor and its ``x``-derivative of the log, one axis."""
    logw = log_heat_kernel_axis(a, t, "W_DELTA", x, y)
    r = np.exp(-2.0 * t)
    om = -np.expm1(-2.0 * t)
    sr = np.exp(-t)
    z = 2.0 * sr * x * y / om
    ratio = np.exp(log_bessel_ive(a + 1.0, z) - log_bessel_ive(a, z))
    dlog = -2.0 * r * x / om + 2.0 * sr * y / om * ratio
    return logw, dlog


def riesz_integrand(i: int, alpha, x, y, t) -> np.ndarray:
    """``d/dx_i W_DELTA_t(x, y)`` at times ``t`` (broadcast)."""
    alpha = _alpha(alpha)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    t = np.asarray(t, dtype=float)
    logw = np.zeros(t.shape)
    d = None
    for j, a in enumerate(alpha):
        if j == i:
            lw, d = _log_factor_and_dlog(a, t, x[j], y[j])
        else:
            lw = log_heat_kernel_axis(a, t, "W_DELTA", x[j], y[j])
        logw = logw + lw
    return np.exp(logw) * d


def _riesz_time_rule(dist: float, alpha: AlphaIndex, width: float, order: int):
    """Panels in ``sigma = log t`` with the ``t^{-1/2} dt`` weight folded in."""
    lo = math.log(max(dist * dist / 400.0, 1e-300))
    hi = math.log(60.0 / (alpha.n + alpha.sum_alpha))
    if lo >= hi:
        lo = hi - 1.0
    s, w = composite_legendre(lo, hi, width, order)
    t = np.exp(s)
    return t, w * np.sqrt(t)


def riesz_kernel(i: int, alpha, x, y, rtol: float = 1e-6, width: float = 0.5, order: int = 12) -> float:
    """``R^i_alpha(x, y)`` for ``x != y`` with adaptive panel refinement."""
    alpha = _alpha(alpha)
    if not 0 <= i < alpha.n:
        raise ValueError("axis index out of range")
    x = _points(x, alpha.n).reshape(-1)
    y = _points(y, alpha.n).reshape(-1)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("x and y must lie in (0, inf)^n")
    dist = float(np.linalg.norm(x - y))
    if dist == 0.0:
        raise ValueError("the Riesz kernel is singular on the diagonal x = y")
    prev = None
    for _ in range(8):
        t, w = _riesz_time_rule(dist, alpha, width, order)
        val = float(np.sum(w * riesz_integrand(i, alpha, x, y, t))) / math.sqrt(math.pi)
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        width *= 0.5
    return val


_RIESZ_CACHE: "weakref.WeakKeyDictionary[QuadGrid, dict]" = weakref.WeakKeyDictionary()


def riesz_matrix(grid: QuadGrid, i: int, width: float = 0.5, order: int = 12) -> np.ndarray:
    """Kernel matrix ``R^i(x_a, x_b)`` on the nodes of a ``nu_alpha`` grid.

    One time rule serves every pair; it is built for the smallest node
    distance, so all pairs are resolved.  The diagonal is set to zero.
    """
    if grid.measure.tag is not MeasureTag.NU_ALPHA:
        raise ValueError("the Riesz kernel acts on nu_alpha grids")
    alpha = grid.alpha
    if not 0 <= i < alpha.n:
        raise ValueError("axis index out of range")
    cache = _RIESZ_CACHE.setdefault(grid, {})
    key = (i, width, order)
    if key in cache:
        return cache[key]
    dmin = min(float(np.min(np.diff(np.sort(ax[0])))) for ax in grid.axes)
    t, w = _riesz_time_rule(dmin, alpha, width, order)
    shape = grid.shape
    n = alpha.n
    # per-axis factor matrices at every time: (T, N_j, N_j)
    facs = []
    for j, ((xj, _), a) in enumerate(zip(grid.axes, alpha)):
        X = xj[None, :, None]
        Y = xj[None, None, :]
        tt = t[:, None, None]
        if j == i:
            lw, d = _log_factor_and_dlog(a, tt, X, Y)
            facs.append(np.exp(lw) * d)
        else:
            facs.append(np.exp(log_heat_kernel_axis(a, tt, "W_DELTA", X, Y)))
    size = grid.size
    mat = np.zeros((size, size))
    for k in range(t.size):
        m = facs[0][k]
        for j in range(1, n):
            m = np.kron(m, facs[j][k])
        mat += w[k] * m
    mat /= math.sqrt(math.pi)
    np.fill_diagonal(mat, 0.0)
    mat.setflags(write=False)
    cache[key] = mat
    del shape
    return mat


def _node_distances(grid: QuadGrid) -> np.ndarray:
    nodes = grid.nodes
    diff = nodes[:, None, :] - nodes[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def truncated_riesz(f: GridFunction, i: int, alpha=None, eps: float = 0.0) -> GridFunction:
    """``int_{|x-y| > eps} R^i(x, y) f(y) d nu_alpha(y)`` at every node."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    grid = f.grid
    if alpha is not None and _alpha(alpha) != grid.alpha:
        raise ValueError("alpha does not match the grid")
    R = riesz_matrix(grid, i)
    mask = _node_distances(grid) > eps
    return f.with_values((R * mask) @ (grid.weights * f.values), eps=eps)


def breakpoint_grid(grid: QuadGrid, cap: int = 4000, seed: int = 0, extra=None) -> tuple:
    """Decreasing ``eps`` values covering every distinct node distance.

    The truncated family is piecewise constant in ``eps`` with jumps exactly
    at node distances, so sampling at each distance (plus one point below the
    smallest one) captures the variation exactly.  Above ``cap`` distances a
    seeded random subset is kept, which makes every computed variation a
    lower bound.  Returns ``(eps, thinned)``.
    """
    d = _node_distances(grid)
    dist = np.unique(d[d > 0])
    thinned = False
    if dist.size > cap:
        rng = np.random.default_rng(seed)
        keep = rng.choice(dist.size, size=cap, replace=False)
        keep[:2] = [0, dist.size - 1]
        dist = np.unique(dist[keep])
        thinned = True
    pts = [dist, [0.5 * dist.min()]]
    if extra is not None:
        pts.append(np.asarray(extra, dtype=float))
    eps = np.unique(np.concatenate(pts))
    eps = eps[eps > 0][::-1]
    return eps, thinned


def truncation_trajectory(
    f: GridFunction,
    i: int,
    alpha=None,
    eps_grid=None,
    cap: int = 4000,
    seed: int = 0,
) -> Trajectory:
    """The family ``eps -> R_{i, alpha; eps} f`` on a decreasing ``eps`` grid.

    Values come from cumulative sums of ``R(x, y_j) f(y_j) w_j`` in order of
    decreasing distance, so every ``eps`` costs a binary search.
    """
    grid = f.grid
    if alpha is not None and _alpha(alpha) != grid.alpha:
        raise ValueError("alpha does not match the grid")
    thinned = False
    if eps_grid is None:
        eps, thinned = breakpoint_grid(grid, cap, seed)
    else:
        eps = np.asarray(eps_grid, dtype=float)
        if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
            raise ValueError("eps_grid must be positive and strictly decreasing")
    R = riesz_matrix(grid, i)
    D = _node_distances(grid)
    contrib = R * (grid.weights * f.values)[None, :]
    out = np.zeros((eps.size, grid.size), dtype=complex)
    for a in range(grid.size):
        order = np.argsort(-D[a], kind="stable")
        dsorted = D[a][order]
        csum = np.concatenate([[0.0], np.cumsum(contrib[a][order])])
        # number of nodes with distance strictly greater than eps
        cnt = np.searchsorted(-dsorted, -eps, side="left")
        out[:, a] = csum[cnt]
    info = {"axis": i, "thinned": thinned, "seed": seed, "n_breakpoints": int(eps.size)}
    return Trajectory(eps, out, grid, info)


# ---------------------------------------------------------------------------
# conjugated kernel (independent pipeline)
# ---------------------------------------------------------------------------


def _conj_w_and_dlog(lam: float, t: float, x: float, y: float):
    """``log WW_t^lam(x, y)`` and ``d/dx log WW_t^lam`` with SciPy Bessel functions."""
    e1 = math.exp(-t)
    om = -math.expm1(-2.0 * t)
    Z = 2.0 * x * y * e1 / om
    coth = (1.0 + e1 * e1) / om
    iv = ive(lam, Z)
    ivm = ive(lam - 1.0, Z)
    logw = math.log(2.0 * math.sqrt(x * y) * e1 / om) + math.log(iv) + Z - 0.5 * (x * x + y * y) * coth
    dlog = 0.5 / x + (ivm / iv - lam / Z) * 2.0 * y * e1 / om - x * coth
    return logw, dlog


def conjugated_riesz_kernel(i: int, alpha, x, y, rtol: float = 1e-10) -> float:
    """``pi^{-1/2} int_0^inf D_{alpha_i} WW_t(x, y) t^{-1/2} dt`` by adaptive quadrature.

    ``WW_t`` is the product of the conjugated one-dimensional kernels and
    ``D_lam = x^{lam+1/2} d/dx x^{-lam-1/2} + x``.  This path shares no code
    with :func:`riesz_kernel`.
    """
    alpha = _alpha(alpha)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.allclose(x, y, rtol=0, atol=0):
        raise ValueError("the kernel is singular on the diagonal")

    def integrand(sig):
        t = math.exp(sig)
        logw = 0.0
        dl = 0.0
        for j, lam in enumerate(alpha):
            lw, d = _conj_w_and_dlog(lam, t, float(x[j]), float(y[j]))
            logw += lw
            if j == i:
                dl = d - (lam + 0.5) / x[j] + x[j]
        return math.exp(logw) * dl * math.sqrt(t)

    dist = float(np.linalg.norm(x - y))
    lo = math.log(dist * dist / 400.0)
    hi = math.log(60.0)
    pts = np.linspace(lo, hi, 12)
    # absolute floor relative to the integrand's overall size, so that panels
    # where it is negligible or changes sign do not chase a relative target
    scale = max(abs(integrand(v)) for v in np.linspace(lo, hi, 241)) * (hi - lo)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(integrand, a, b, epsabs=1e-3 * rtol * scale, epsrel=rtol, limit=400)[0]
    return total / math.sqrt(math.pi)


def conjugation_factor(alpha, x, y) -> float:
    """``2^n e^{-(|x|^2+|y|^2)/2} prod (x_j y_j)^{alpha_j+1/2} / Gamma(alpha_j+1)``."""
    alpha = _alpha(alpha)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    logv = alpha.n * math.log(2.0) - 0.5 * float(np.sum(x * x + y * y))
    for j, a in enumerate(alpha):
        logv += (a + 0.5) * math.log(x[j] * y[j]) - math.lgamma(a + 1.0)
    return math.exp(logv)


# ---------------------------------------------------------------------------
# profiles of the subordinated local kernel
# ---------------------------------------------------------------------------


def log_g_profile(u, x, y, s, alpha) -> np.ndarray:
    """``log g(u) = -N log(1-e^{-u}) - q_-(e^{-u/2} x, y, s)/(1-e^{-u})``, ``N = n + |alpha|``.

    ``u`` broadcasts against the leading dimensions of ``x, y, s``.
    """
    alpha = _alpha(alpha)
    N = alpha.n + alpha.sum_alpha
    x, y, s = _points(x, alpha.n), _points(y, alpha.n), _points(s, alpha.n)
    u = np.asarray(u, dtype=float)
    om = -np.expm1(-u)
    e = np.exp(-0.5 * u)
    x2 = np.sum(x * x, axis=-1)[..., None]
    y2 = np.sum(y * y, axis=-1)[..., None]
    xys = np.sum(x * y * s, axis=-1)[..., None]
    q = e * e * x2 + y2 - 2.0 * e * xys
    return -N * np.log(om) - q / om


def _log_g_t(t, x, y, s, N):
    """``log h(t)`` with ``t = 1 - e^{-u}`` in (0, 1]."""
    c = np.sqrt(1.0 - t)
    q = (1.0 - t) * np.sum(x * x) + np.sum(y * y) - 2.0 * c * np.sum(x * y * s)
    return -N * np.log(t) - q / t


def sup_g(x, y, s, alpha, level: int = 0) -> float:
    """``log sup_u g_{x,y,s}(u)`` by a dense log grid plus local refinement.

    The limit ``u -> inf`` (value ``e^{-|y|^2}``) is included.
    """
    alpha = _alpha(alpha)
    N = alpha.n + alpha.sum_alpha
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    s = np.asarray(s, dtype=float).reshape(-1)
    M = 400 * 2**level
    lt = np.linspace(math.log(1e-14), 0.0, M)
    vals = _log_g_t(np.exp(lt), x, y, s, N)
    k = int(np.argmax(vals))
    best = max(float(vals[k]), -float(np.sum(y * y)))
    lo = lt[max(k - 1, 0)]
    hi = lt[min(k + 1, M - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda v: -_log_g_t(math.exp(v), x, y, s, N), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
        )
        best = max(best, -float(res.fun))
    return best


# ---------------------------------------------------------------------------
# resolution control and local kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Resolution:
    """Quadrature sizes; ``level`` doubles every one of them."""

    level: int = 0

    @property
    def n_u(self) -> int:
        return 400 * 2**self.level

    @property
    def t_width(self) -> float:
        return 1.0 / 2**self.level

    @property
    def s_width(self) -> float:
        return 1.0 / 2**self.level

    @property
    def n_jacobi(self) -> int:
        return 20 * 2**self.level

    order: int = 8


def _row_panels(lo: np.ndarray, hi: np.ndarray, width: float, order: int):
    """Gauss-Legendre panel rules on ``[lo_k, hi_k]`` for every row ``k``."""
    span = hi - lo
    npan = max(1, int(math.ceil(span.max() / width)))
    pw = span / npan
    xl, wl = _legendre(order)
    left = lo[:, None] + pw[:, None] * np.arange(npan)[None, :]
    nodes = (left[:, :, None] + 0.5 * pw[:, None, None] * (xl + 1.0)).reshape(lo.size, -1)
    weights = np.broadcast_to(0.5 * pw[:, None, None] * wl, (lo.size, npan, order)).reshape(lo.size, -1)
    return nodes, weights


def local_riesz_kernel_s(
    i: int,
    x,
    y,
    s,
    alpha,
    res: Resolution = Resolution(),
    measure: str = "m",
    cutoff: bool = True,
) -> np.ndarray:
    """Local Riesz kernel ``R^i_loc(x, y, s)`` for arrays of triples.

    ``measure="m"`` (default) gives the kernel relative to ``dm_alpha``; the
    ``nu_alpha``-relative kernel carries an extra factor ``e^{|y|^2}``.
    """
    alpha = _alpha(alpha)
    n = alpha.n
    x, y, s = (np.atleast_2d(_points(v, n)) for v in (x, y, s))
    if measure not in ("m", "nu"):
        raise ValueError("measure must be 'm' or 'nu'")
    out = np.empty(x.shape[0])
    step = 2048
    for k in range(0, x.shape[0], step):
        sl = slice(k, k + step)
        out[sl] = _local_riesz_rows(i, x[sl], y[sl], s[sl], alpha, res, measure)
    if cutoff:
        out = out * CutoffPhi(alpha)(x, y, s)
    return out


def _local_riesz_rows(i, x, y, s, alpha, res, measure):
    N = alpha.n + alpha.sum_alpha
    q = SplitGeometry(alpha).q_minus(x, y, s)
    lo = np.log(np.maximum(q, 1e-300) / 400.0)
    hi = np.full(q.shape, math.log(60.0 / N))
    lo = np.minimum(lo, hi - 1.0)
    sig, w = _row_panels(lo, hi, res.t_width, res.order)
    t = np.exp(sig)
    om = -np.expm1(-2.0 * t)
    e1 = np.exp(-t)
    x2 = np.sum(x * x, axis=-1)[:, None]
    y2 = np.sum(y * y, axis=-1)[:, None]
    xys = np.sum(x * y * s, axis=-1)[:, None]
    qt = e1 * e1 * x2 + y2 - 2.0 * e1 * xys
    pref = e1 * e1 * x[:, i : i + 1] - e1 * y[:, i : i + 1] * s[:, i : i + 1]
    logmag = -(N + 1.0) * np.log(om) - t * N - qt / om
    if measure == "nu":
        logmag = logmag + y2
    return np.sum(w * np.sqrt(t) * pref * np.exp(logmag), axis=1) * (-2.0 / math.sqrt(math.pi))


def _pair_s_rule(x: np.ndarray, y: np.ndarray, a: float, geo_radius: np.ndarray, res: Resolution):
    """``s``-nodes and ``Pi_alpha``-weights covering the support of ``phi`` (n = 1).

    ``phi`` vanishes once ``q_- > (2 C0 / (1 + x + y))^2``, i.e. for
    ``1 - s > delta``.
    """
    d2 = (x - y) ** 2
    delta = ((2.0 * geo_radius) ** 2 - d2) / (2.0 * x * y)
    delta = np.clip(delta, 0.0, 2.0)
    lognorm = gammaln(a + 1.0) - gammaln(a + 0.5) - 0.5 * math.log(math.pi)
    # v = 1 - s.  On [0, v0] q_- changes by at most 5%, so a Gauss-Jacobi rule
    # carrying v^{a - 1/2} is exact up to a smooth factor; log panels follow.
    top = np.minimum(delta, 1.0)
    v0 = np.minimum(0.05 * d2 / (2.0 * x * y), top)
    xj, wj = _jacobi(res.n_jacobi, 0.0, a - 0.5)
    v_in = 0.5 * v0[:, None] * (xj + 1.0)
    w_in = (0.5 * v0[:, None]) ** (a + 0.5) * wj * np.exp(lognorm + (a - 0.5) * np.log(2.0 - v_in))
    w_in = np.where(v0[:, None] > 0, w_in, 0.0)
    lo = np.log(np.maximum(v0, 1e-300))
    hi = np.log(np.maximum(top, 1e-300))
    sig, w = _row_panels(lo, np.maximum(hi, lo), res.s_width, res.order)
    v = np.exp(sig)
    w_out = w * v * np.exp(lognorm + (a - 0.5) * np.log(v * (2.0 - v)))
    w_out = np.where((top > v0)[:, None], w_out, 0.0)
    s_near = np.concatenate([1.0 - v_in, 1.0 - v], axis=1)
    w_near = np.concatenate([w_in, w_out], axis=1)
    # the remaining part s in (-1, 0] only matters when delta > 1
    xj, wj = _jacobi(res.n_jacobi, 0.0, a - 0.5)
    s_far = np.broadcast_to(0.5 * (xj - 1.0), (x.size, xj.size))
    w_far = (0.5 ** (a + 0.5)) * wj * np.exp(lognorm + (a - 0.5) * np.log1p(-0.5 * (xj - 1.0)))
    w_far = np.where((delta > 1.0)[:, None], np.broadcast_to(w_far, s_far.shape), 0.0)
    return np.concatenate([s_near, s_far], axis=1), np.concatenate([w_near, w_far], axis=1)


def local_riesz_kernel_pair(i: int, x, y, alpha, res: Resolution = Resolution(), measure: str = "m") -> np.ndarray:
    """``R^i_loc(x, y) = int R^i_loc(x, y, s) Pi_alpha(s) ds`` for arrays of pairs (n = 1)."""
    alpha = _alpha(alpha)
    if alpha.n != 1:
        raise NotImplementedError("pair kernels are implemented for n = 1")
    if i != 0:
        raise ValueError("axis index out of range")
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    geo = SplitGeometry(alpha)
    rad = geo.radius(x[:, None], y[:, None])
    sn, sw = _pair_s_rule(x, y, alpha[0], rad, res)
    P, S = sn.shape
    X = np.repeat(x, S)[:, None]
    Y = np.repeat(y, S)[:, None]
    vals = local_riesz_kernel_s(0, X, Y, sn.reshape(-1, 1), alpha, res, measure).reshape(P, S)
    return np.sum(vals * sw, axis=1)


def _u_grid(q: np.ndarray, res: Resolution) -> np.ndarray:
    lo = np.log(np.minimum(np.maximum(q, 1e-300) / 400.0, 1e-3))
    hi = math.log(60.0)
    return np.exp(lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, res.n_u)[None, :])


def _total_variation(vals: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Sampled total variation with the limits at both ends of the u-axis."""
    return (
        np.abs(vals[:, 0] - start)
        + np.sum(np.abs(np.diff(vals, axis=1)), axis=1)
        + np.abs(end - vals[:, -1])
    )


def poisson_local_variation(x, y, s, alpha, res: Resolution = Resolution(), derivative: bool = False) -> np.ndarray:
    """``int_0^inf |d/du g_{x,y,s}(u)| du`` (the variation-norm surrogate).

    With ``derivative=True`` returns ``sum_i TV(d g/dx_i) + TV(d g/dy_i)``,
    using the analytic derivatives of ``g``.
    """
    alpha = _alpha(alpha)
    n = alpha.n
    x, y, s = (np.atleast_2d(_points(v, n)) for v in (x, y, s))
    q = SplitGeometry(alpha).q_minus(x, y, s)
    u = _u_grid(q, res)
    g = np.exp(log_g_profile(u, x, y, s, alpha))
    y2 = np.sum(y * y, axis=-1)
    if not derivative:
        return _total_variation(g, np.zeros(len(q)), np.exp(-y2))
    om = -np.expm1(-u)
    e = np.exp(-0.5 * u)
    total = np.zeros(len(q))
    for i in range(n):
        xi, yi, si = x[:, i : i + 1], y[:, i : i + 1], s[:, i : i + 1]
        dx = g * (-(2.0 * e * e * xi - 2.0 * e * yi * si) / om)
        dy = g * (-(2.0 * yi - 2.0 * e * xi * si) / om)
        total += _total_variation(dx, np.zeros(len(q)), np.zeros(len(q)))
        total += _total_variation(dy, np.zeros(len(q)), -2.0 * y[:, i] * np.exp(-y2))
    return total


def poisson_pair_variation(x, y, alpha, res: Resolution = Resolution()) -> np.ndarray:
    """Variation in ``u`` of ``G(u) = int g_{x,y,s}(u) phi(x,y,s) Pi_alpha(s) ds`` (n = 1)."""
    alpha = _alpha(alpha)
    if alpha.n != 1:
        raise NotImplementedError("pair kernels are implemented for n = 1")
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    rad = SplitGeometry(alpha).radius(x[:, None], y[:, None])
    sn, sw = _pair_s_rule(x, y, alpha[0], rad, res)
    q = (x - y) ** 2
    u = _u_grid(q, res)  # (P, U)
    phi = CutoffPhi(alpha)(x[:, None, None], y[:, None, None], sn[:, :, None])  # (P, S)
    out = np.empty(x.size)
    for p in range(x.size):
        lg = log_g_profile(u[p][None, :], np.full((sn.shape[1], 1), x[p]), np.full((sn.shape[1], 1), y[p]), sn[p][:, None], alpha)
        G = (sw[p] * phi[p]) @ np.exp(lg)
        endpoint = np.sum(sw[p] * phi[p]) * math.exp(-y[p] ** 2)
        out[p] = _total_variation(G[None, :], np.zeros(1), np.array([endpoint]))[0]
    return out


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _offset(x: np.ndarray, radius: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """``y = x + r e`` with ``|e| = 1`` random and ``r`` log-uniform in ``[1e-3, 1]`` times ``radius``."""
    e = rng.standard_normal(x.shape)
    e /= np.linalg.norm(e, axis=-1, keepdims=True)
    r = radius * 10.0 ** rng.uniform(-3.0, 0.0, radius.shape)
    return x + r[..., None] * e


def sample_local_triples(geo: SplitGeometry, size: int, rng: np.random.Generator, s_nodes: int = 64):
    """Triples in ``N_tau`` with ``x`` log-uniform in ``[1e-2, 8]^n``.

    ``s`` is drawn from interior Gauss-Jacobi nodes and ``y = x + r e`` with a
    random direction ``e`` and ``r`` log-uniform up to the radius of
    ``N_tau``; candidates outside ``N_tau`` are rejected.
    """
    n = geo.alpha.n
    sn, _ = JacobiWeight(geo.alpha).rule(s_nodes if n == 1 else max(8, s_nodes // 4))
    xs, ys, ss = [], [], []
    count = 0
    while count < size:
        m = 4 * (size - count) + 16
        x = np.exp(rng.uniform(math.log(1e-2), math.log(8.0), (m, n)))
        y = _offset(x, geo.radius(x, x), rng)
        s = sn[rng.integers(0, sn.shape[0], m)]
        ok = np.all(y > 0, axis=-1)
        ok[ok] = geo.contains(x[ok], y[ok], s[ok])
        xs.append(x[ok])
        ys.append(y[ok])
        ss.append(s[ok])
        count += int(ok.sum())
    return (np.concatenate(xs)[:size], np.concatenate(ys)[:size], np.concatenate(ss)[:size])


def sample_local_pairs(geo: SplitGeometry, size: int, rng: np.random.Generator):
    """Off-diagonal pairs with ``|x - y|`` within the radius of ``N_tau`` (n = 1)."""
    if geo.alpha.n != 1:
        raise NotImplementedError("pair sampling is implemented for n = 1")
    xs, ys = [], []
    count = 0
    while count < size:
        m = 4 * (size - count) + 16
        x = np.exp(rng.uniform(math.log(1e-2), math.log(8.0), (m, 1)))
        y = _offset(x, geo.radius(x, x), rng)
        x, y = x[:, 0], y[:, 0]
        ok = (y > 0) & (x != y)
        ok[ok] = np.abs(x[ok] - y[ok]) <= geo.radius(x[ok, None], y[ok, None])
        xs.append(x[ok])
        ys.append(y[ok])
        count += int(ok.sum())
    return np.concatenate(xs)[:size], np.concatenate(ys)[:size]


def sample_global_triples(alpha, size: int, rng: np.random.Generator):
    """Triples outside ``N_1``: ``x, y`` log-uniform in ``[1e-2, 8]^n``, ``s`` uniform."""
    alpha = _alpha(alpha)
    geo = SplitGeometry(alpha, 1.0)
    n = alpha.n
    xs, ys, ss = [], [], []
    count = 0
    while count < size:
        m = 2 * (size - count) + 16
        x = np.exp(rng.uniform(math.log(1e-2), math.log(8.0), (m, n)))
        y = np.exp(rng.uniform(math.log(1e-2), math.log(8.0), (m, n)))
        s = rng.uniform(-1.0, 1.0, (m, n))
        ok = ~geo.contains(x, y, s)
        xs.append(x[ok])
        ys.append(y[ok])
        ss.append(s[ok])
        count += int(ok.sum())
    return (np.concatenate(xs)[:size], np.concatenate(ys)[:size], np.concatenate(ss)[:size])


# ---------------------------------------------------------------------------
# verification sweeps
# ---------------------------------------------------------------------------

LOCAL_BOUNDS = ("poisson_size", "poisson_gradient", "poisson_pair_size", "poisson_pair_gradient", "riesz_size", "riesz_gradient", "riesz_pair_size", "riesz_pair_gradient")


def _fd_grad_pair(fun, x, y, h):
    gx = (fun(x + h, y) - fun(x - h, y)) / (2 * h)
    gy = (fun(x, y + h) - fun(x, y - h)) / (2 * h)
    return np.abs(gx) + np.abs(gy)


def _bound_quantities(bound: str, alpha: AlphaIndex, samples, res: Resolution) -> np.ndarray:
    """``quantity x normalizer`` for every sample at resolution ``res``."""
    N = alpha.n + alpha.sum_alpha
    geo = SplitGeometry(alpha)
    if bound in ("poisson_size", "poisson_gradient", "riesz_size", "riesz_gradient"):
        x, y, s = samples
        q = geo.q_minus(x, y, s)
        if bound == "poisson_size":
            return poisson_local_variation(x, y, s, alpha, res) * q**N
        if bound == "poisson_gradient":
            return poisson_local_variation(x, y, s, alpha, res, derivative=True) * q ** (N + 0.5)
        if bound == "riesz_size":
            return np.abs(local_riesz_kernel_s(0, x, y, s, alpha, res)) * q**N
        # riesz_gradient: finite-difference gradients of the local kernel (any axis)
        h = 1e-5 * np.sqrt(q)[:, None]
        total = np.zeros(len(q))
        for i in range(alpha.n):
            for k in range(alpha.n):
                e = np.zeros(alpha.n)
                e[k] = 1.0
                gx = (local_riesz_kernel_s(i, x + h * e, y, s, alpha, res) - local_riesz_kernel_s(i, x - h * e, y, s, alpha, res)) / (2 * h[:, 0])
                gy = (local_riesz_kernel_s(i, x, y + h * e, s, alpha, res) - local_riesz_kernel_s(i, x, y - h * e, s, alpha, res)) / (2 * h[:, 0])
                total += np.abs(gx) + np.abs(gy)
        return total * q ** (N + 0.5)
    x, y = samples
    d = np.abs(x - y)
    ball = np.array([ball_measure_m_alpha([xi], di, alpha) for xi, di in zip(x, d)])
    if bound == "poisson_pair_size":
        return poisson_pair_variation(x, y, alpha, res) * ball
    if bound == "riesz_pair_size":
        return np.abs(local_riesz_kernel_pair(0, x, y, alpha, res)) * ball
    h = 1e-5 * d
    if bound == "poisson_pair_gradient":
        grad = _fd_grad_pair(lambda a, b: poisson_pair_variation(a, b, alpha, res), x, y, h)
        return grad * d * ball
    if bound == "riesz_pair_gradient":
        grad = _fd_grad_pair(lambda a, b: local_riesz_kernel_pair(0, a, b, alpha, res), x, y, h)
        return grad * d * ball
    raise ValueError(f"unknown bound {bound!r}")


def verify_local_bounds(
    alpha,
    tau: float,
    sample_size: int = 2000,
    seed: int = 0,
    bounds=("poisson_size", "poisson_gradient", "poisson_pair_size", "riesz_size", "riesz_gradient", "riesz_pair_size", "riesz_pair_gradient"),
    tolerance: float = 0.2,
) -> list:
    """Empirical constants of the local kernel bounds and their refinement drift.

    Each report is ``{bound_id, alpha, tau, n_samples, empirical_C,
    empirical_C_refined, refinement_ratio, pass}``.  ``pass`` requires finite
    constants whose ratio under doubled quadrature resolution is within
    ``1 +- tolerance``.  Pair bounds (the ``*_pair_*`` ids) need ``n = 1``.
    """
    alpha = _alpha(alpha)
    geo = SplitGeometry(alpha, tau)
    rng = np.random.default_rng(seed)
    triples = sample_local_triples(geo, sample_size, rng)
    pairs = sample_local_pairs(geo, sample_size, rng) if alpha.n == 1 else None
    reports = []
    for b in bounds:
        if b not in LOCAL_BOUNDS:
            raise ValueError(f"unknown bound {b!r}")
        samples = triples if b in ("poisson_size", "poisson_gradient", "riesz_size", "riesz_gradient") else pairs
        if samples is None:
            continue
        c0 = float(np.max(_bound_quantities(b, alpha, samples, Resolution(0))))
        c1 = float(np.max(_bound_quantities(b, alpha, samples, Resolution(1))))
        ratio = c1 / c0 if c0 > 0 else math.inf
        ok = bool(math.isfinite(c0) and math.isfinite(c1) and c0 > 0 and abs(ratio - 1.0) < tolerance)
        reports.append(
            {
                "bound_id": b,
                "alpha": alpha.to_list(),
                "tau": float(tau),
                "n_samples": int(sample_size),
                "empirical_C": c0,
                "empirical_C_refined": c1,
                "refinement_ratio": ratio,
                "pass": ok,
            }
        )
    return reports


def verify_global_domination(alpha, n_samples: int = 2000, seed: int = 0, tolerance: float = 0.2) -> dict:
    """``sup_u g_{x,y,s}(u) <= C K_alpha(x,y,s)`` on sampled global triples.

    ``C`` is computed at two grid refinement levels; ``pass`` requires both
    to be finite and within ``1 +- tolerance`` of each other.
    """
    alpha = _alpha(alpha)
    rng = np.random.default_rng(seed)
    x, y, s = sample_global_triples(alpha, n_samples, rng)
    logK = global_kernel_K(x, y, s, alpha, Setting.POISSON_VAR, log=True)
    logC = []
    for level in (0, 1):
        sups = np.array([sup_g(x[k], y[k], s[k], alpha, level) for k in range(n_samples)])
        logC.append(float(np.max(sups - logK)))
    c0, c1 = math.exp(logC[0]), math.exp(logC[1])
    ratio = c1 / c0
    return {
        "bound_id": "global",
        "alpha": alpha.to_list(),
        "n_samples": int(n_samples),
        "empirical_C": c0,
        "empirical_C_refined": c1,
        "refinement_ratio": ratio,
        "pass": bool(math.isfinite(c0) and math.isfinite(c1) and abs(ratio - 1.0) < tolerance),
    }
