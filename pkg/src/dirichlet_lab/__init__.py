"""Numerical toolkit for weighted Dirichlet spaces on the half line."""

__version__ = "0.1.0"

from .classify import bp_infinity, bp_zero, density_report, regime  # noqa: E402
from .errors import DirichletLabError  # noqa: E402
from .space import DirichletFunction  # noqa: E402
from .weights import (make_power, make_two_exponent, parse_weight,  # noqa: E402
                      interpolate_weights, dual_density, WeightProfile)

__all__ = [
    "__version__",
    "bp_zero",
    "bp_infinity",
    "regime",
    "density_report",
    "DirichletLabError",
    "DirichletFunction",
    "make_power",
    "make_two_exponent",
    "parse_weight",
    "interpolate_weights",
    "dual_density",
    "WeightProfile",
]
