"""Variation operators, Littlewood-Paley functions and Riesz transforms for Laguerre expansions."""

from .laguerre_ops import (
    HeatKernelParams,
    SpectralTruncation,
    Variant,
    apply_heat,
    apply_poisson,
    heat_kernel,
)
from .measure_space import GridFunction, MeasureKind, MeasureTag, QuadGrid, lp_norm, weak_l1_quasinorm
from .special_fn import AlphaIndex, LogValue
from .varops import (
    Trajectory,
    g_function,
    jump_count,
    jump_domination_lhs,
    oscillation,
    rho_variation,
    short_variation,
)
from .weyl import TimeGrid, WeylOrder, weyl_poisson_trajectory

__version__ = "0.1.0"
