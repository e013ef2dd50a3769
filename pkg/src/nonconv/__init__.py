"""Nonconventional sums over bivariate polynomial arrays.

Exact classification of polynomial pairs, ordering partitions, stationary
process simulation with certified mixing profiles, nonconventional sums and
recurrence counts, and Monte Carlo verification of the SLLN, limiting
covariances and the functional CLT with Stein-method diagnostics.
"""

__version__ = "0.1.0"

from .polyalg import BivariatePoly, UniPoly, HomDecomposition, parse_poly, format_poly
from .ordering import PolyFamily
from .process import BaseM, FiniteMarkov, ContinuedFraction, MixingProfile
from .sums import TensorTable, BlackBox, indicator_product
from .stats import RunConfig

__all__ = [
    "BivariatePoly", "UniPoly", "HomDecomposition", "parse_poly", "format_poly",
    "PolyFamily", "BaseM", "FiniteMarkov", "ContinuedFraction", "MixingProfile",
    "TensorTable", "BlackBox", "indicator_product", "RunConfig", "__version__",
]
