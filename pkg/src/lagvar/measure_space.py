"""Measures on ``(0, inf)^n``, tensor quadrature grids and grid functions."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from ._quad import composite_legendre, gauss_laguerre_probability
from .special_fn import AlphaIndex

__all__ = [
    "MeasureTag",
    "MeasureKind",
    "QuadGrid",
    "GridFunction",
    "lp_norm",
    "weak_l1_quasinorm",
    "DYADIC_LADDER",
    "ball_measure_m_alpha",
    "pushforward_isometry_check",
]

DYADIC_LADDER = 2.0 ** np.arange(-20, 21)


class MeasureTag(enum.Enum):
    MU_ALPHA = "mu"
    NU_ALPHA = "nu"
    M_ALPHA = "m"
    LEBESGUE = "lebesgue"


@dataclass(frozen=True)
class MeasureKind:
    tag: MeasureTag
    alpha: AlphaIndex

    @property
    def n(self) -> int:
        return self.alpha.n

    def log_density(self, y) -> np.ndarray:
        """Log of the density at points ``y`` of shape ``(..., n)``."""
        y = np.asarray(y, dtype=float)
        a = self.alpha.as_array()
        if self.tag is MeasureTag.LEBESGUE:
            return np.zeros(y.shape[:-1])
        with np.errstate(divide="ignore"):
            logy = np.log(y)
        if self.tag is MeasureTag.MU_ALPHA:
            return np.sum(a * logy - y - gammaln(a + 1.0), axis=-1)
        base = self.n * math.log(2.0) + np.sum((2 * a + 1.0) * logy - gammaln(a + 1.0), axis=-1)
        if self.tag is MeasureTag.NU_ALPHA:
            return base - np.sum(y * y, axis=-1)
        return base

    def density(self, y) -> np.ndarray:
        return np.exp(self.log_density(y))


@dataclass(frozen=True, eq=False)
class QuadGrid:
    """Tensor-product quadrature rule adapted to a measure.

    ``axes`` holds one ``(nodes, weights)`` pair per coordinate; the full node
    set is their cartesian product in C order.
    """

    axes: tuple
    measure: MeasureKind

    def __post_init__(self):
        if len(self.axes) != self.measure.n:
            raise ValueError("number of axes must match the dimension of alpha")
        for x, w in self.axes:
            if x.shape != w.shape or x.ndim != 1:
                raise ValueError("each axis needs matching 1-D nodes and weights")
            if np.any(w <= 0) or np.any(x <= 0):
                raise ValueError("nodes and weights must be positive")

    # -- constructors -----------------------------------------------------

    @classmethod
    def mu(cls, alpha, size: int | Sequence[int]) -> "QuadGrid":
        """Generalized Gauss-Laguerre grid for ``mu_alpha``."""
        alpha = alpha if isinstance(alpha, AlphaIndex) else AlphaIndex(alpha)
        sizes = _per_axis(size, alpha.n)
        axes = []
        for a, m in zip(alpha, sizes):
            x, w = gauss_laguerre_probability(int(m), float(a))
            axes.append((np.array(x), np.array(w)))
        return cls(tuple(axes), MeasureKind(MeasureTag.MU_ALPHA, alpha))

    @classmethod
    def nu(cls, alpha, size: int | Sequence[int]) -> "QuadGrid":
        """Grid for ``nu_alpha``: the ``mu_alpha`` grid pushed through ``y -> sqrt(y)``."""
        return cls.mu(alpha, size).pushforward()

    @classmethod
    def box(cls, alpha, size, radius: float, tag=MeasureTag.M_ALPHA, panels: int = 1) -> "QuadGrid":
        """Composite Gauss-Legendre grid on ``(0, radius]^n`` for ``m_alpha`` or Lebesgue measure."""
        alpha = alpha if isinstance(alpha, AlphaIndex) else AlphaIndex(alpha)
        tag = MeasureTag(tag)
        if tag not in (MeasureTag.M_ALPHA, MeasureTag.LEBESGUE):
            raise ValueError("box grids are only built for m_alpha or Lebesgue measure")
        kind = MeasureKind(tag, alpha)
        sizes = _per_axis(size, alpha.n)
        axes = []
        for i, m in enumerate(sizes):
            x, w = composite_legendre(0.0, radius, radius / panels, int(m))
            dens = MeasureKind(tag, AlphaIndex(alpha[i])).density(x[:, None])
            axes.append((x, w * dens))
        return cls(tuple(axes), kind)

    # -- transport ----------------------------------------------------------

    def pushforward(self) -> "QuadGrid":
        if self.measure.tag is not MeasureTag.MU_ALPHA:
            raise ValueError("pushforward is defined for mu_alpha grids")
        axes = tuple((np.sqrt(x), w.copy()) for x, w in self.axes)
        return QuadGrid(axes, MeasureKind(MeasureTag.NU_ALPHA, self.measure.alpha))

    def pullback(self) -> "QuadGrid":
        if self.measure.tag is not MeasureTag.NU_ALPHA:
            raise ValueError("pullback is defined for nu_alpha grids")
        axes = tuple((x * x, w.copy()) for x, w in self.axes)
        return QuadGrid(axes, MeasureKind(MeasureTag.MU_ALPHA, self.measure.alpha))

    # -- accessors ------------------------------------------------------------

    @property
    def alpha(self) -> AlphaIndex:
        return self.measure.alpha

    @property
    def n(self) -> int:
        return self.measure.n

    @property
    def shape(self) -> tuple:
        return tuple(len(x) for x, _ in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*[x for x, _ in self.axes], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def weights(self) -> np.ndarray:
        w = self.axes[0][1]
        for _, wi in self.axes[1:]:
            w = np.multiply.outer(w, wi)
        return np.asarray(w).ravel()

    def same_as(self, other: "QuadGrid") -> bool:
        if self is other:
            return True
        if self.measure != other.measure or self.shape != other.shape:
            return False
        return all(
            np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            for a, b in zip(self.axes, other.axes)
        )

    def function(self, func: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Sample ``func`` (taking an ``(N, n)`` array of points) on the grid."""
        return GridFunction(self, np.asarray(func(self.nodes)))

    def constant(self, c: complex = 1.0) -> "GridFunction":
        return GridFunction(self, np.full(self.size, c, dtype=complex))


def _per_axis(size, n: int) -> tuple:
    sizes = tuple(int(s) for s in np.atleast_1d(size))
    if len(sizes) == 1:
        sizes = sizes * n
    if len(sizes) != n or min(sizes) < 1:
        raise ValueError(f"need {n} positive axis sizes, got {size}")
    return sizes


@dataclass(eq=False)
class GridFunction:
    """Complex values attached to the nodes of a :class:`QuadGrid`."""

    grid: QuadGrid
    values: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if vals.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        self.values = vals

    def tensor(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def with_values(self, values, **info) -> "GridFunction":
        return GridFunction(self.grid, values, dict(info))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def transported(self) -> "GridFunction":
        """``S_Psi``: the same values seen on the transported grid."""
        tag = self.grid.measure.tag
        if tag is MeasureTag.MU_ALPHA:
            return GridFunction(self.grid.pushforward(), self.values.copy())
        if tag is MeasureTag.NU_ALPHA:
            return GridFunction(self.grid.pullback(), self.values.copy())
        raise ValueError("only mu_alpha and nu_alpha grids can be transported")

    # -- CSV --------------------------------------------------------------------

    def to_csv(self, path) -> None:
        nodes = self.grid.nodes
        w = self.grid.weights
        header = [f"x{i + 1}" for i in range(self.grid.n)] + ["weight", "re", "im"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for j in range(self.grid.size):
                row = [f"{v:.17g}" for v in nodes[j]]
                row += [f"{w[j]:.17g}", f"{self.values[j].real:.17g}", f"{self.values[j].imag:.17g}"]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path, measure: MeasureKind) -> "GridFunction":
        """Read a CSV written by :meth:`to_csv` and rebuild the tensor grid."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        n = measure.n
        if len(header) != n + 3:
            raise ValueError(f"CSV has {len(header) - 3} coordinate columns, measure has n={n}")
        data = np.array([[float(v) for v in r] for r in body if r])
        coords, weights = data[:, :n], data[:, n]
        values = data[:, n + 1] + 1j * data[:, n + 2]
        axes_nodes = [np.unique(coords[:, i]) for i in range(n)]
        shape = tuple(len(a) for a in axes_nodes)
        if int(np.prod(shape)) != len(data):
            raise ValueError("CSV nodes do not form a tensor grid")
        idx = [np.searchsorted(axes_nodes[i], coords[:, i]) for i in range(n)]
        flat = np.ravel_multi_index(idx, shape)
        wt = np.empty(len(data))
        wt[flat] = weights
        vals = np.empty(len(data), dtype=complex)
        vals[flat] = values
        wt = wt.reshape(shape)
        # marginals m_i = w_i * prod_{j != i} S_j; dividing all but the first
        # by the total mass recovers a factorization with the same products
        total = wt.sum()
        axes = []
        for i in range(n):
            other = tuple(j for j in range(n) if j != i)
            marg = wt.sum(axis=other) if other else wt
            axes.append((axes_nodes[i], marg if i == 0 else marg / total))
        grid = QuadGrid(tuple(axes), measure)
        return cls(grid, vals)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def lp_norm(f: GridFunction, p: float) -> float:
    """``(sum_i w_i |f_i|^p)^(1/p)``; the maximum modulus when ``p = inf``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float(np.sum(f.grid.weights * a**p) ** (1.0 / p))


def weak_l1_quasinorm(f: GridFunction | np.ndarray, lambdas=None, weights=None) -> float:
    """``max_lambda lambda * measure{|f| > lambda}`` over the supplied levels.

    This is a lower bound for the supremum over all ``lambda > 0``.
    """
    if isinstance(f, GridFunction):
        a = np.abs(f.values)
        w = f.grid.weights
    else:
        a = np.abs(np.asarray(f))
        w = np.asarray(weights, dtype=float)
    lambdas = DYADIC_LADDER if lambdas is None else np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("need at least one level")
    best = 0.0
    for lam in lambdas:
        best = max(best, float(lam * w[a > lam].sum()))
    return best


# ---------------------------------------------------------------------------
# balls for m_alpha
# ---------------------------------------------------------------------------


def _interval_m_alpha(lo, hi, a: float) -> np.ndarray:
    """``m_alpha`` measure (one axis) of ``(lo, hi)`` with ``lo >= 0``."""
    e = 2.0 * a + 2.0
    return (hi**e - lo**e) / math.exp(math.log(a + 1.0) + math.lgamma(a + 1.0))


def ball_measure_m_alpha(x, r: float, alpha, return_bounds: bool = False):
    """``m_alpha(B(x, r) intersected with (0, inf)^n)``.

    Exact for ``n = 1``.  For ``n >= 2`` the ball is squeezed between the
    inscribed cube (half side ``r/sqrt(n)``) and the circumscribed cube (half
    side ``r``); the geometric mean of the two is returned, and with
    ``return_bounds=True`` the triple ``(value, inner, outer)``.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    alpha = alpha if isinstance(alpha, AlphaIndex) else AlphaIndex(alpha)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (alpha.n,) or np.any(x <= 0):
        raise ValueError("x must be a point of (0, inf)^n")

    def box(h):
        val = 1.0
        for xi, a in zip(x, alpha):
            val *= float(_interval_m_alpha(max(xi - h, 0.0), xi + h, a))
        return val

    if alpha.n == 1:
        v = box(r)
        return (v, v, v) if return_bounds else v
    inner = box(r / math.sqrt(alpha.n))
    outer = box(r)
    value = math.sqrt(inner * outer)
    return (value, inner, outer) if return_bounds else value


def pushforward_isometry_check(f: GridFunction, q: float) -> tuple:
    """Return ``(||f||_{L^q(mu_alpha)}, ||S_Psi f||_{L^q(nu_alpha)})``."""
    if f.grid.measure.tag is not MeasureTag.MU_ALPHA:
        raise ValueError("expected a function on a mu_alpha grid")
    g = f.transported()
    return lp_norm(f, q), lp_norm(g, q)
