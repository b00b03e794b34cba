from .config import SETTINGS, series_settings
from .fourier import EpsExpansion, FTSeries, ft_average, ft_diff, ft_eval, ft_mul
from .logpoly import LogPolynomial, lp_solve_linear_ode
from .radial import RadialSeries, rs_mul, rs_reciprocal

__all__ = [
    "SETTINGS",
    "series_settings",
    "RadialSeries",
    "rs_mul",
    "rs_reciprocal",
    "FTSeries",
    "EpsExpansion",
    "ft_mul",
    "ft_diff",
    "ft_average",
    "ft_eval",
    "LogPolynomial",
    "lp_solve_linear_ode",
]
