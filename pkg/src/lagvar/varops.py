"""Variational functionals of sampled operator families.

All functionals act on a :class:`Trajectory`: values of a family ``S_t f``
on a finite, strictly decreasing parameter set, at every node of a grid.
Because only finitely many parameters are sampled, each functional is a
lower bound of its continuous counterpart; refining the parameter set never
decreases it.

Every functional is computed node-wise and vectorized across nodes.  Sums
are accumulated in trajectory order so that the elementary dominations
(jumps by variation, oscillation by 2-variation) hold exactly in floating
point and not only up to rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Trajectory",
    "DyadicBlocks",
    "rho_variation",
    "oscillation",
    "jump_count",
    "jump_domination_lhs",
    "short_variation",
    "g_function",
    "dyadic_index",
]


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Trajectory:
    """Values ``v[j, node]`` of a family at parameters ``t_1 > ... > t_N``."""

    params: np.ndarray
    values: np.ndarray
    grid: object = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != params.size:
            raise ValueError("values must have shape (number of params, number of nodes)")
        if params.size == 0:
            raise ValueError("a trajectory needs at least one parameter")
        if np.any(params <= 0) or np.any(~np.isfinite(params)):
            raise ValueError("params must be positive and finite")
        if np.any(np.diff(params) >= 0):
            raise ValueError("params must be strictly decreasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("trajectory values must be finite")
        self.params = params
        self.values = values

    @property
    def n_params(self) -> int:
        return self.params.size

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]

    def node(self, j: int) -> "Trajectory":
        return Trajectory(self.params, self.values[:, j], None, dict(self.info))

    def restrict(self, mask) -> "Trajectory":
        mask = np.asarray(mask)
        return Trajectory(self.params[mask], self.values[mask], self.grid, dict(self.info))

    def to_csv(self, path) -> None:
        """Columns ``node, t, re, im``; one row per (node, param)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "t", "re", "im"])
            for node in range(self.n_nodes):
                for j in range(self.n_params):
                    v = self.values[j, node]
                    writer.writerow([node, f"{self.params[j]:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [r for r in reader]
        if not rows:
            raise ValueError("empty trajectory file")
        nodes = np.array([int(r["node"]) for r in rows])
        ts = np.array([float(r["t"]) for r in rows])
        vals = np.array([float(r["re"]) + 1j * float(r.get("im", 0.0) or 0.0) for r in rows])
        node_ids = np.unique(nodes)
        params = np.unique(ts)[::-1]
        out = np.full((params.size, node_ids.size), np.nan + 0j)
        pi = {t: i for i, t in enumerate(params)}
        ni = {n: i for i, n in enumerate(node_ids)}
        for n, t, v in zip(nodes, ts, vals):
            out[pi[t], ni[n]] = v
        if np.any(np.isnan(out)):
            raise ValueError("trajectory file does not give every (node, t) pair")
        return cls(params, out)


def _as_trajectory(traj) -> tuple:
    """Accept a Trajectory or a 1-D value sequence; report whether to squeeze."""
    if isinstance(traj, Trajectory):
        return traj, False
    vals = np.asarray(traj, dtype=complex).reshape(-1)
    params = np.arange(vals.size, 0, -1, dtype=float)
    return Trajectory(params, vals), True


def _out(arr: np.ndarray, squeeze: bool):
    return arr[0].item() if squeeze else arr


def _pow(d: np.ndarray, rho: float) -> np.ndarray:
    """``d ** rho`` with one shared code path for every functional."""
    return d**rho


# ---------------------------------------------------------------------------
# dyadic blocks
# ---------------------------------------------------------------------------


def dyadic_index(t) -> np.ndarray:
    """Block index ``k`` with ``2^{-k} < t <= 2^{-k+1}``."""
    t = np.asarray(t, dtype=float)
    k = np.floor(-np.log2(t)).astype(int) + 1
    # guard the half-open convention against rounding in log2
    k = np.where(t > 2.0 ** (-k + 1), k - 1, k)
    k = np.where(t <= 2.0 ** (-k), k + 1, k)
    return k


@dataclass(frozen=True)
class DyadicBlocks:
    """Partition of the parameter indices into dyadic time blocks."""

    index: tuple
    blocks: tuple

    @classmethod
    def from_params(cls, params) -> "DyadicBlocks":
        k = dyadic_index(params)
        uniq = tuple(int(v) for v in np.unique(k))
        return cls(uniq, tuple(np.flatnonzero(k == v) for v in uniq))

    def __iter__(self):
        return iter(zip(self.index, self.blocks))


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def _variation_power_sum(values: np.ndarray, rho: float) -> np.ndarray:
    """``max over subsequences of sum |v_{j+1} - v_j|^rho`` per node (DP)."""
    n = values.shape[0]
    best = np.zeros(values.shape, dtype=float)
    for i in range(1, n):
        cand = best[:i] + _pow(np.abs(values[i] - values[:i]), rho)
        best[i] = cand.max(axis=0)
    return best.max(axis=0)


def rho_variation(traj, rho: float, permissive: bool = False):
    """Exact ``rho``-variation of the sampled values.

    ``rho > 2`` is required unless ``permissive`` is set, in which case any
    ``rho >= 1`` is accepted (used for oscillation and short variation).
    """
    if permissive:
        if not rho >= 1:
            raise ValueError("rho must be >= 1")
    elif not rho > 2:
        raise ValueError("rho must exceed 2 (use permissive=True for 1 <= rho <= 2)")
    tr, squeeze = _as_trajectory(traj)
    return _out(_variation_power_sum(tr.values, rho) ** (1.0 / rho), squeeze)


def _brackets_of(params: np.ndarray, tj: np.ndarray) -> list:
    tj = np.asarray(tj, dtype=float)
    if tj.ndim != 1 or tj.size < 2 or np.any(np.diff(tj) >= 0):
        raise ValueError("tj must be a strictly decreasing sequence with at least two entries")
    if params.max() > tj[0]:
        raise ValueError("tj must cover the largest sampled parameter")
    out = []
    for j in range(tj.size - 1):
        idx = np.flatnonzero((params <= tj[j]) & (params >= tj[j + 1]))
        out.append(idx)
    return out


def oscillation(traj, tj):
    """``(sum_j sup |v(s) - v(s')|^2)^{1/2}`` over brackets ``[t_{j+1}, t_j]``."""
    tr, squeeze = _as_trajectory(traj)
    total = np.zeros(tr.n_nodes)
    for idx in _brackets_of(tr.params, tj):
        if idx.size < 2:
            continue
        block = tr.values[idx]
        diam = np.zeros(tr.n_nodes)
        for a in range(1, idx.size):
            diam = np.maximum(diam, _pow(np.abs(block[a] - block[:a]), 2.0).max(axis=0))
        total = total + diam
    return _out(total ** 0.5, squeeze)


def _greedy_jumps(values: np.ndarray, lam: float):
    """Greedy jump system per node: count and the closing pairs.

    Parameters are swept in increasing time (reverse index) order and each
    jump is closed at the earliest admissible endpoint.
    """
    rev = values[::-1]
    npar, nodes = rev.shape
    counts = np.zeros(nodes, dtype=int)
    pairs = [[] for _ in range(nodes)]
    real = np.all(rev.imag == 0)
    for node in range(nodes):
        v = rev[:, node].real if real else rev[:, node]
        start = 0
        if real:
            lo = hi = v[0]
            lo_i = hi_i = 0
            for q in range(1, npar):
                x = v[q]
                if x - lo > lam or hi - x > lam:
                    r = lo_i if x - lo > lam else hi_i
                    counts[node] += 1
                    pairs[node].append((r, q))
                    start = q
                    lo = hi = x
                    lo_i = hi_i = q
                    continue
                if x < lo:
                    lo, lo_i = x, q
                if x > hi:
                    hi, hi_i = x, q
        else:
            for q in range(1, npar):
                d = np.abs(v[q] - v[start:q])
                if np.any(d > lam):
                    r = start + int(np.argmax(d > lam))
                    counts[node] += 1
                    pairs[node].append((r, q))
                    start = q
    # convert reversed positions back to trajectory indices
    pairs = [[(npar - 1 - r, npar - 1 - q) for r, q in p] for p in pairs]
    return counts, pairs


def jump_count(traj, lam: float):
    """Maximal number of disjoint ``lam``-jumps among the sampled parameters."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    tr, squeeze = _as_trajectory(traj)
    counts, _ = _greedy_jumps(tr.values, lam)
    return _out(counts, squeeze)


def jump_domination_lhs(traj, lam: float, rho: float):
    """``lam * jump_count^{1/rho}``; never exceeds :func:`rho_variation`."""
    tr, squeeze = _as_trajectory(traj)
    counts, _ = _greedy_jumps(tr.values, lam)
    return _out(lam * counts.astype(float) ** (1.0 / rho), squeeze)


def short_variation(traj):
    """``(sum_k V_k^2)^{1/2}`` with ``V_k`` the 2-variation inside dyadic block ``k``."""
    tr, squeeze = _as_trajectory(traj)
    total = np.zeros(tr.n_nodes)
    for _, idx in DyadicBlocks.from_params(tr.params):
        if idx.size < 2:
            continue
        total = total + _variation_power_sum(tr.values[idx], 2.0)
    return _out(total ** 0.5, squeeze)


# ---------------------------------------------------------------------------
# Littlewood-Paley g-function
# ---------------------------------------------------------------------------


def g_function(
    f,
    beta: float,
    alpha=None,
    variant="W",
    t_range=(1e-8, 60.0),
    N_t: int = 400,
    heat: str = "auto",
    trunc=None,
):
    """``(int_0^inf |t^beta D^beta P_t f|^2 dt/t)^{1/2}`` at every node.

    The ``t``-integral is a trapezoid rule in ``log t`` on ``t_range``.  The
    returned ``info`` carries ``tail_bound``: the fraction of the eigen-profile
    integral ``int u^{2 beta} e^{-2u} du/u`` lost outside the range, maximized
    over the retained spectrum.
    """
    from scipy.special import gammaincc, gammaln

    from .laguerre_ops import SpectralTruncation, Variant, eigenvalues
    from .measure_space import GridFunction
    from .weyl import TimeGrid, WeylOrder, weyl_poisson_trajectory

    if not beta > 0:
        raise ValueError("beta must be positive")
    t_lo, t_hi = float(t_range[0]), float(t_range[1])
    if not (0 < t_lo < t_hi):
        raise ValueError("t_range must satisfy 0 < t_min < t_max")
    if N_t < 2:
        raise ValueError("N_t must be at least 2")
    alpha = alpha if alpha is not None else f.grid.alpha
    variant = Variant(variant)
    times = TimeGrid.geometric(t_lo, t_hi, N_t)
    traj = weyl_poisson_trajectory(f, WeylOrder(beta), times, alpha, variant, heat=heat, trunc=trunc)
    h = math.log(t_hi / t_lo) / (N_t - 1)
    w = np.full(N_t, h)
    w[0] = w[-1] = 0.5 * h
    g2 = w @ np.abs(traj.values) ** 2

    # tail bound from the eigen-profile u^beta e^{-u}
    trunc = trunc or SpectralTruncation.default(f.grid)
    top = trunc.max_degree * (f.grid.n if trunc.mode == "tensor" else 1)
    k_lo = np.zeros(f.grid.n, dtype=int)
    if variant is not Variant.W_DELTA:
        k_lo[0] = 1
    k_hi = np.zeros(f.grid.n, dtype=int)
    k_hi[0] = top
    lam_lo, lam_hi = (float(v) for v in eigenvalues(f.grid.alpha, variant, np.stack([k_lo, k_hi])))
    full = math.exp(gammaln(2 * beta)) / 2 ** (2 * beta)
    low = (2 * t_lo * math.sqrt(lam_hi)) ** (2 * beta) / (2 * beta) / 2 ** (2 * beta)
    high = full * float(gammaincc(2 * beta, 2 * t_hi * math.sqrt(lam_lo)))
    info = {"tail_bound": (low + high) / full, "t_range": [t_lo, t_hi], "N_t": N_t}
    return GridFunction(f.grid, np.sqrt(g2), info)
