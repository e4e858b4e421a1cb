"""Sequential linear optimization on the difference-of-convex split of f_q.

f_q(beta) = |r_(q)| = H_q(beta) - H_{q+1}(beta) where H_m sums the ordered
absolute residuals from position m to n.  Each iteration keeps H_q exact via
its LP dual and linearizes H_{q+1} at the current iterate; the linearization
majorizes the concave part, so the objective F never increases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError, ValidationError
from .fits import (Dataset, FitKind, FitResult, Polyhedron, _as_quantile,
                   ordered_abs_residual, top_sum)
from .lp import LinearProgram, LpStatus, Sense, solve_lp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeqLoConfig:
    tol: float = 1e-4
    max_iter: int = 200
    record_trace: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")


@dataclass
class SeqLoState:
    beta: np.ndarray
    nu: np.ndarray
    theta: float
    F: float
    delta: float = 0.0
    guard: Optional[Polyhedron] = None
    basis: tuple = field(default=(), repr=False)


def _sgn(v):
    return np.where(v >= 0, 1.0, -1.0)


def top_set(residuals: np.ndarray, m: int) -> np.ndarray:
    """Indices of the n - m + 1 largest |r_i|, ties to the smaller index."""
    a = np.abs(residuals)
    order = np.lexsort((np.arange(a.size), -a))
    return order[: a.size - m + 1]


def h_subgradient(data: Dataset, beta, m: int) -> np.ndarray:
    """A subgradient of H_m at beta: sum over the top set of -sgn(r_i) x_i."""
    n = data.n
    if not 1 <= m <= n + 1:
        raise ValidationError(f"m={m} out of range 1..{n + 1}")
    r = data.residuals(beta)
    idx = top_set(r, m)
    if idx.size == 0:
        return np.zeros(data.p)
    return -(_sgn(r[idx])[:, None] * data.X[idx]).sum(axis=0)


def canonical_state(data: Dataset, q: int, beta) -> SeqLoState:
    """Optimal (nu, theta) of the H_q dual at a fixed beta; then F == f_q(beta)."""
    beta = np.asarray(beta, dtype=float)
    a = np.abs(data.residuals(beta))
    theta = ordered_abs_residual(a, q)
    nu = np.maximum(a - theta, 0.0)
    return SeqLoState(beta=beta, nu=nu, theta=theta,
                      F=F_value(data, q, nu, theta, beta))


def F_value(data: Dataset, q: int, nu, theta, beta) -> float:
    """theta (n - q + 1) + sum(nu) - H_{q+1}(beta)."""
    n = data.n
    return float(theta * (n - q + 1) + np.sum(nu) - top_sum(data.residuals(beta), q + 1))


def _step_lp(data: Dataset, q: int, g: np.ndarray, box: Optional[Polyhedron]) -> LinearProgram:
    n, p = data.n, data.p
    X, y = data.X, data.y
    # variables: theta (free), nu (n, >= 0), beta (p, free)
    c = np.concatenate([[n - q + 1.0], np.ones(n), -g])
    ones = np.ones((n, 1))
    eye = np.eye(n)
    A = np.vstack([np.hstack([ones, eye, X]), np.hstack([ones, eye, -X])])
    b = np.concatenate([y, -y])
    senses = [Sense.GE] * (2 * n)
    if box is not None:
        A = np.vstack([A, np.hstack([np.zeros((box.A.shape[0], n + 1)), box.A])])
        b = np.concatenate([b, box.b])
        senses += [Sense.LE] * box.A.shape[0]
    lo = np.concatenate([[-np.inf], np.zeros(n), np.full(p, -np.inf)])
    return LinearProgram(c, A, senses, b, lo, None)


def linearized_step(data: Dataset, q, beta_k, prev: Optional[SeqLoState] = None,
                    guard: Optional[Polyhedron] = None, guard_center=None) -> SeqLoState:
    """Minimize the linearized objective around ``beta_k``.

    The LP minimizer's (nu, theta) block is replaced by the optimal block for
    the new beta, which is itself an LP minimizer, so the returned state has
    F equal to f_q at the new beta.  ``delta`` is the stationarity measure
    <grad F(state_k), state_{k+1} - state_k>.
    """
    q = _as_quantile(q).check(data.n).q
    beta_k = np.asarray(beta_k, dtype=float)
    if prev is None:
        prev = canonical_state(data, q, beta_k)
    g = h_subgradient(data, beta_k, q + 1)
    lp = _step_lp(data, q, g, guard)
    warm = prev.basis if (prev.basis and (prev.guard is None) == (guard is None)) else None
    sol = solve_lp(lp, basis=warm)
    if sol.status is LpStatus.UNBOUNDED and guard is None:
        center = beta_k if guard_center is None else np.asarray(guard_center, dtype=float)
        m_guard = 10.0 * (1.0 + np.max(np.abs(center)))
        log.info("linearized LP unbounded; adding box of radius %g", m_guard)
        guard = Polyhedron.box(center, m_guard)
        sol = solve_lp(_step_lp(data, q, g, guard))
    if not sol.optimal:
        raise NumericalError(f"linearized LP ended with status {sol.status.value}")
    n = data.n
    beta_new = sol.primal[n + 1:]
    new = canonical_state(data, q, beta_new)
    delta = ((n - q + 1) * (new.theta - prev.theta) + np.sum(new.nu - prev.nu)
             - g @ (new.beta - prev.beta))
    new.delta = float(delta)
    new.guard = guard
    new.basis = sol.basis
    return new


def sequential_lo(data: Dataset, q, beta1, cfg: SeqLoConfig = SeqLoConfig()) -> FitResult:
    """Iterate linearized LPs until the relative decrease of f_q drops below tol.

    ``trace`` holds F_1, F_2, ...; ``info['deltas']`` holds Delta_1, Delta_2, ...
    (Delta_k compares state k with state k+1).
    """
    q = _as_quantile(q).check(data.n).q
    beta1 = np.asarray(beta1, dtype=float).reshape(-1)
    if beta1.size != data.p:
        raise ValidationError(f"beta1 has length {beta1.size}, expected {data.p}")
    state = canonical_state(data, q, beta1)
    Fs = [state.F]
    deltas = []
    states = [state] if cfg.record_trace else []
    guard = None
    iterations = 0
    for _ in range(cfg.max_iter):
        new = linearized_step(data, q, state.beta, prev=state, guard=guard, guard_center=beta1)
        iterations += 1
        guard = new.guard
        deltas.append(new.delta)
        Fs.append(new.F)
        if cfg.record_trace:
            states.append(new)
        f_old, f_new = state.F, new.F
        if f_new <= f_old:
            state = new
        if f_old - f_new <= cfg.tol * f_old:
            break
    beta = state.beta
    res = data.residuals(beta)
    info = {"algorithm": "seqlo", "deltas": deltas, "iterations": iterations,
            "guard_activated": guard is not None}
    if cfg.record_trace:
        info["states"] = states
    return FitResult(beta=beta, residuals=res, objective=ordered_abs_residual(res, q),
                     kind=FitKind.LQS, trace=Fs, info=info)
