"""Least quantile of squares regression: heuristics, exact branch-and-bound and tooling."""

from .errors import NumericalError, ValidationError
from .fits import (Dataset, FitKind, FitResult, Polyhedron, QuantileSpec, chebyshev_fit,
                   lad_fit, least_squares_fit, lqs_objective)

__version__ = "0.1.0"

__all__ = ["Dataset", "FitKind", "FitResult", "NumericalError", "Polyhedron",
           "QuantileSpec", "ValidationError", "chebyshev_fit", "lad_fit",
           "least_squares_fit", "lqs_objective", "__version__"]
