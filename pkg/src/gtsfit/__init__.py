"""Tempered-stable return modelling: spectral density inversion, ML fitting, tail risk."""

__version__ = "0.1.0"

from .gts_model import GtsParams, cumulants, moment_stats
from .spectral import FourierGrid, DensityTable, choose_grid, density_table
from .mle import FitOptions, FitStatus, fit
from .risk import RiskReport, TailSide, avar, var

__all__ = [
    "GtsParams",
    "cumulants",
    "moment_stats",
    "FourierGrid",
    "DensityTable",
    "choose_grid",
    "density_table",
    "FitOptions",
    "FitStatus",
    "fit",
    "RiskReport",
    "TailSide",
    "avar",
    "var",
    "__version__",
]
