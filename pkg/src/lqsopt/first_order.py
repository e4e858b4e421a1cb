"""Fixed-step subdifferential descent on the LQS objective."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ValidationError
from .fits import Dataset, FitKind, FitResult, _as_quantile


@dataclass(frozen=True)
class FirstOrderConfig:
    max_iter: int = 500
    step_size: Union[float, str] = "auto"
    record_trace: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if self.step_size != "auto" and not (float(self.step_size) > 0):
            raise ValidationError("explicit step_size must be positive")


def auto_step(data: Dataset) -> float:
    return 1.0 / float(np.max(np.linalg.norm(data.X, axis=1)))


def _sgn(v):
    # sgn(0) := +1 so the kink selection is deterministic
    return np.where(v >= 0, 1.0, -1.0)


def qth_index(residuals: np.ndarray, q: int) -> int:
    """Sample attaining the q-th ordered |r|; smallest index among ties."""
    a = np.abs(residuals)
    v = np.partition(a, q - 1)[q - 1]
    return int(np.flatnonzero(a == v)[0])


def lqs_subdifferential(data: Dataset, beta, q) -> np.ndarray:
    """-sgn(r_(q)) x_(q): an element of the subdifferential of f_q at beta."""
    q = _as_quantile(q).check(data.n).q
    r = data.residuals(beta)
    i = qth_index(r, q)
    return -_sgn(r[i]) * data.X[i]


def subdifferential_descent(data: Dataset, q, beta1, cfg: FirstOrderConfig = FirstOrderConfig()) -> FitResult:
    """Run ``cfg.max_iter`` fixed-size steps and return the best iterate seen.

    Iterates beta_1 .. beta_MaxIter are evaluated; the earliest iterate with
    the smallest objective wins.
    """
    q = _as_quantile(q).check(data.n).q
    step = auto_step(data) if cfg.step_size == "auto" else float(cfg.step_size)
    X, y = data.X, data.y
    beta = np.array(beta1, dtype=float).reshape(-1)
    if beta.size != data.p:
        raise ValidationError(f"beta1 has length {beta.size}, expected {data.p}")
    best_beta, best_f = beta.copy(), np.inf
    trace = []
    for k in range(cfg.max_iter):
        r = y - X @ beta
        a = np.abs(r)
        v = np.partition(a, q - 1)[q - 1]
        if cfg.record_trace:
            trace.append(float(v))
        if v < best_f:
            best_f, best_beta = float(v), beta.copy()
        if k + 1 == cfg.max_iter:
            break
        i = int(np.flatnonzero(a == v)[0])
        g = -(1.0 if r[i] >= 0 else -1.0) * X[i]
        beta = beta - step * g
    res = data.residuals(best_beta)
    return FitResult(beta=best_beta, residuals=res, objective=best_f, kind=FitKind.LQS,
                     trace=trace, info={"algorithm": "subgradient", "step_size": step})
