"""Datasets, classical regression fits and order-statistic helpers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .lp import LinearProgram, Sense, solve_lp

# relative tolerance used when counting residuals tied at a Chebyshev optimum
TIE_TOL = 1e-7


@dataclass(frozen=True)
class Dataset:
    y: np.ndarray
    X: np.ndarray
    row_ids: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValidationError("X must be a matrix")
        n, p = X.shape
        if n < 1 or p < 1:
            raise ValidationError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
        if y.size != n:
            raise ValidationError(f"y has {y.size} entries but X has {n} rows")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ValidationError("dataset contains non-finite entries")
        ids = tuple(self.row_ids) if len(self.row_ids) else tuple(range(n))
        if len(ids) != n:
            raise ValidationError("row_ids length must equal n")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "row_ids", ids)

    @classmethod
    def from_arrays(cls, y, X, intercept: bool = False) -> "Dataset":
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if intercept:
            X = np.hstack([np.ones((X.shape[0], 1)), X])
        return cls(y=y, X=X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def residuals(self, beta) -> np.ndarray:
        return self.y - self.X @ np.asarray(beta, dtype=float)

    def subset(self, idx: Sequence[int]) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.y[idx], self.X[idx], tuple(self.row_ids[i] for i in idx))


class FitKind(str, enum.Enum):
    LEAST_SQUARES = "LeastSquares"
    LAD = "LAD"
    CHEBYSHEV = "Chebyshev"
    LQS = "LQS"


@dataclass
class FitResult:
    beta: np.ndarray
    residuals: np.ndarray
    objective: float
    kind: FitKind
    trace: list = field(default_factory=list)
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class QuantileSpec:
    """Order-statistic index q (1-based) of the absolute residuals."""

    q: int

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValidationError(f"q must be a positive integer, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))

    def check(self, n: int) -> "QuantileSpec":
        if not 1 <= self.q <= n:
            raise ValidationError(f"q={self.q} out of range 1..{n}")
        return self

    @classmethod
    def max_breakdown(cls, n: int, p: int) -> "QuantileSpec":
        return cls(n // 2 + (p + 1) // 2)

    @classmethod
    def median(cls, n: int) -> "QuantileSpec":
        """LMS choice q = n - floor(n/2)."""
        return cls(n - n // 2)


@dataclass(frozen=True)
class Polyhedron:
    """Linear restriction ``A beta <= b`` on the coefficient vector."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ValidationError("polyhedron A and b disagree in row count")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def box(cls, center, radius: float) -> "Polyhedron":
        center = np.asarray(center, dtype=float).reshape(-1)
        p = center.size
        eye = np.eye(p)
        return cls(np.vstack([eye, -eye]),
                   np.concatenate([center + radius, -(center - radius)]))

    def contains(self, beta, tol: float = 1e-9) -> bool:
        return bool(np.all(self.A @ beta <= self.b + tol * (1 + np.abs(self.b))))

    def stack(self, other: Optional["Polyhedron"]) -> "Polyhedron":
        if other is None:
            return self
        return Polyhedron(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]))


def _as_quantile(q) -> QuantileSpec:
    return q if isinstance(q, QuantileSpec) else QuantileSpec(q)


# ---------------------------------------------------------------------------
# order statistics


def ordered_abs_residual(residuals, q) -> float:
    """q-th smallest absolute residual."""
    a = np.abs(np.asarray(residuals, dtype=float))
    q = _as_quantile(q).check(a.size).q
    return float(np.partition(a, q - 1)[q - 1])


def top_sum(residuals, m: int) -> float:
    """H_m: sum of the ordered absolute residuals from position m to n.

    With ascending order |r_(1)| <= ... <= |r_(n)| this is the sum of the
    n - m + 1 largest values, so ``top_sum(r, q) - top_sum(r, q + 1)`` is
    exactly ``|r_(q)|``.  ``m = n + 1`` gives the empty sum.
    """
    a = np.sort(np.abs(np.asarray(residuals, dtype=float)))
    n = a.size
    if not 1 <= m <= n + 1:
        raise ValidationError(f"m={m} out of range 1..{n + 1}")
    return float(a[m - 1:].sum())


def top_sum_lp(residuals, m: int) -> float:
    """H_m through its LP dual: min θ(n-m+1) + Σν, θ + ν_i >= |r_i|, ν >= 0."""
    a = np.abs(np.asarray(residuals, dtype=float))
    n = a.size
    c = np.concatenate([[n - m + 1.0], np.ones(n)])
    A = np.hstack([np.ones((n, 1)), np.eye(n)])
    lo = np.concatenate([[-np.inf], np.zeros(n)])
    sol = solve_lp(LinearProgram(c, A, [Sense.GE] * n, a, lo, None))
    if not sol.optimal:
        raise NumericalError(f"top-sum LP ended with status {sol.status.value}")
    return sol.objective_value


def lqs_objective(data: Dataset, beta, q) -> float:
    return ordered_abs_residual(data.residuals(beta), q)


def count_at_level(residuals, level: float, tol: float = TIE_TOL) -> int:
    """Number of |r_i| equal to ``level`` within ``tol * (1 + level)``."""
    a = np.abs(np.asarray(residuals, dtype=float))
    return int(np.sum(np.abs(a - level) <= tol * (1.0 + level)))


# ---------------------------------------------------------------------------
# fits


def least_squares_fit(data: Dataset) -> FitResult:
    """Ordinary least squares; minimum-norm solution when X is rank deficient."""
    beta, _, rank, _ = np.linalg.lstsq(data.X, data.y, rcond=None)
    r = data.residuals(beta)
    return FitResult(beta=beta, residuals=r, objective=float(r @ r),
                     kind=FitKind.LEAST_SQUARES,
                     info={"rank": int(rank), "rank_deficient": bool(rank < data.p)})


def lad_fit(data: Dataset) -> FitResult:
    """Least absolute deviations via the split r = r+ - r-."""
    n, p = data.n, data.p
    # variables: beta (free, p), r+ (n), r- (n)
    c = np.concatenate([np.zeros(p), np.ones(2 * n)])
    A = np.hstack([data.X, np.eye(n), -np.eye(n)])
    lo = np.concatenate([np.full(p, -np.inf), np.zeros(2 * n)])
    sol = solve_lp(LinearProgram(c, A, [Sense.EQ] * n, data.y, lo, None))
    if not sol.optimal:
        raise NumericalError(f"LAD LP ended with status {sol.status.value}")
    beta = sol.primal[:p]
    r = data.residuals(beta)
    return FitResult(beta=beta, residuals=r, objective=float(np.abs(r).sum()),
                     kind=FitKind.LAD, info={"lp_iterations": sol.iterations})


def chebyshev_lp(data: Dataset, subset: Iterable[int],
                 constraints: Optional[Polyhedron] = None) -> LinearProgram:
    """LP for min t s.t. -t <= y_i - x_i'beta <= t over ``subset``.

    Variable order is (t, beta).
    """
    idx = np.asarray(list(subset), dtype=int)
    if idx.size == 0:
        raise ValidationError("Chebyshev fit needs a nonempty subset")
    if idx.min() < 0 or idx.max() >= data.n:
        raise ValidationError("subset index out of range")
    p = data.p
    Xs, ys = data.X[idx], data.y[idx]
    k = idx.size
    ones = np.ones((k, 1))
    # t + x'b >= y  and  t - x'b >= -y
    A = np.vstack([np.hstack([ones, Xs]), np.hstack([ones, -Xs])])
    b = np.concatenate([ys, -ys])
    senses = [Sense.GE] * (2 * k)
    if constraints is not None:
        if constraints.A.shape[1] != p:
            raise ValidationError("constraint matrix column count must equal p")
        A = np.vstack([A, np.hstack([np.zeros((constraints.A.shape[0], 1)), constraints.A])])
        b = np.concatenate([b, constraints.b])
        senses += [Sense.LE] * constraints.A.shape[0]
    c = np.zeros(p + 1)
    c[0] = 1.0
    lo = np.concatenate([[0.0], np.full(p, -np.inf)])
    return LinearProgram(c, A, senses, b, lo, None)


def chebyshev_fit(data: Dataset, subset: Optional[Iterable[int]] = None,
                  constraints: Optional[Polyhedron] = None) -> FitResult:
    """ℓ∞ fit on ``subset`` (all rows when omitted).

    Only the optimal value is unique; for degenerate subsets the returned
    coefficients are whichever LP vertex the simplex reaches.
    """
    if subset is None:
        subset = range(data.n)
    subset = list(subset)
    sol = solve_lp(chebyshev_lp(data, subset, constraints))
    if not sol.optimal:
        raise NumericalError(f"Chebyshev LP ended with status {sol.status.value}")
    beta = sol.primal[1:]
    r = data.residuals(beta)
    t = float(np.max(np.abs(r[subset])))
    return FitResult(beta=beta, residuals=r, objective=t, kind=FitKind.CHEBYSHEV,
                     info={"subset": tuple(int(i) for i in subset),
                           "lp_value": sol.objective_value,
                           "dual": sol.dual})
