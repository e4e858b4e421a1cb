"""Ground-truth LQS values for small instances.

``enumerate_lqs`` scans every q-subset and keeps the best Chebyshev fit; the
minimum over subsets is the exact LQS optimum with no general-position
assumption.  ``grid_lqs`` is a coarse second opinion for p <= 2.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np

from .errors import ValidationError
from .fits import (TIE_TOL, Dataset, FitKind, FitResult, Polyhedron, _as_quantile,
                   chebyshev_fit, count_at_level, lqs_objective)

DEFAULT_SUBSET_LIMIT = 2_000_000


class SubsetLimitError(ValidationError):
    """Raised when C(n, q) exceeds the enumeration budget."""


def enumerate_lqs(data: Dataset, q, subset_limit: int = DEFAULT_SUBSET_LIMIT,
                  constraints: Optional[Polyhedron] = None) -> FitResult:
    """Minimum over all q-subsets (lexicographic order) of the Chebyshev value.

    The first subset attaining the minimum is kept; ``info['subset']`` holds it.
    """
    q = _as_quantile(q).check(data.n).q
    n = data.n
    total = math.comb(n, q)
    if total > subset_limit:
        raise SubsetLimitError(f"C({n}, {q}) = {total} subsets exceeds the limit {subset_limit}")
    best, best_subset = None, None
    for S in itertools.combinations(range(n), q):
        fit = chebyshev_fit(data, S, constraints)
        if best is None or fit.objective < best.objective:
            best, best_subset = fit, S
    beta = best.beta
    res = data.residuals(beta)
    return FitResult(beta=beta, residuals=res, objective=best.objective, kind=FitKind.LQS,
                     info={"algorithm": "oracle", "subset": best_subset, "subsets": total,
                           "lqs_at_beta": lqs_objective(data, beta, q)})


def grid_lqs(data: Dataset, q, box, resolution: int) -> float:
    """Smallest f_q over a uniform grid on the box (center, radius), p <= 2.

    The grid has ``resolution + 1`` points per axis including both faces.
    """
    q = _as_quantile(q).check(data.n).q
    if data.p > 2:
        raise ValidationError(f"grid search supports p <= 2, got p={data.p}")
    if resolution < 10:
        raise ValidationError("resolution must be >= 10")
    center, radius = box
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.size != data.p:
        raise ValidationError(f"box center has length {center.size}, expected {data.p}")
    axes = [np.linspace(c - radius, c + radius, resolution + 1) for c in center]
    pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(data.p, -1)
    a = np.abs(data.y[:, None] - data.X @ pts)
    vals = np.partition(a, q - 1, axis=0)[q - 1]
    return float(vals.min())


def residual_multiplicity(data: Dataset, beta, level: float, rel_tol: float = TIE_TOL) -> int:
    """Number of samples with | |r_i| - level | <= rel_tol * (1 + level)."""
    return count_at_level(data.residuals(beta), level, rel_tol)
