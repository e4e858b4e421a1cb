"""Dense two-phase primal simplex.

Every optimization subproblem in the package (Chebyshev and LAD fits, the
linearized sequential-LO step, branch-and-bound node relaxations) is a small
dense LP, so a full-tableau simplex is adequate and keeps the package free of
external solver dependencies.

Problems are stated as::

    minimize    c'x
    subject to  A[i] x  (<=, =, >=)  b[i]
                lower <= x <= upper      (bounds may be infinite)
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
DUALITY_GAP_TOL = 1e-7

# tableau is rebuilt from the original data every REFACTOR_EVERY pivots
REFACTOR_EVERY = 100


class LpValidationError(ValueError):
    """Raised for malformed LinearProgram data."""


class Sense(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class LpTolerances:
    feas_tol: float = FEAS_TOL
    opt_tol: float = OPT_TOL
    pivot_tol: float = PIVOT_TOL
    duality_gap_tol: float = DUALITY_GAP_TOL


def _as_sense(s) -> Sense:
    if isinstance(s, Sense):
        return s
    aliases = {"<=": Sense.LE, "le": Sense.LE, "L": Sense.LE,
               "=": Sense.EQ, "==": Sense.EQ, "eq": Sense.EQ, "E": Sense.EQ,
               ">=": Sense.GE, "ge": Sense.GE, "G": Sense.GE}
    try:
        return aliases[s]
    except KeyError:
        raise LpValidationError(f"unknown row sense {s!r}") from None


@dataclass
class LinearProgram:
    objective: np.ndarray
    constraint_matrix: np.ndarray
    row_senses: Sequence[Sense]
    rhs: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        nvar = self.objective.size
        A = np.asarray(self.constraint_matrix, dtype=float)
        if A.size == 0:
            A = A.reshape(0, nvar)
        if A.ndim != 2:
            raise LpValidationError("constraint_matrix must be 2-D")
        self.constraint_matrix = A
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.row_senses = tuple(_as_sense(s) for s in self.row_senses)
        if not (A.shape[0] == self.rhs.size == len(self.row_senses)):
            raise LpValidationError(
                f"row count mismatch: matrix has {A.shape[0]} rows, rhs has "
                f"{self.rhs.size}, senses has {len(self.row_senses)}")
        if A.shape[1] != nvar:
            raise LpValidationError(
                f"column count mismatch: matrix has {A.shape[1]} columns, "
                f"objective has {nvar}")
        self.lower = (np.zeros(nvar) if self.lower is None
                      else np.asarray(self.lower, dtype=float).reshape(-1))
        self.upper = (np.full(nvar, np.inf) if self.upper is None
                      else np.asarray(self.upper, dtype=float).reshape(-1))
        if self.lower.size != nvar or self.upper.size != nvar:
            raise LpValidationError("variable bounds must match objective length")
        if np.any(self.lower > self.upper):
            j = int(np.argmax(self.lower > self.upper))
            raise LpValidationError(
                f"lower bound exceeds upper bound for variable {j}")
        if (np.any(np.isnan(A)) or np.any(np.isnan(self.rhs))
                or np.any(np.isnan(self.objective))):
            raise LpValidationError("NaN in LP data")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise LpValidationError("bounds may not be +inf below or -inf above")

    @property
    def n_rows(self) -> int:
        return self.constraint_matrix.shape[0]

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    primal: np.ndarray
    dual: np.ndarray
    objective_value: float
    reduced_costs: np.ndarray = field(repr=False)
    basis: tuple = field(default=(), repr=False)
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


# ---------------------------------------------------------------------------
# standard form


@dataclass
class _StdForm:
    A: np.ndarray          # m x N, rhs made nonnegative
    b: np.ndarray
    c: np.ndarray
    n_struct: int          # structural columns (after splitting)
    artificial: np.ndarray  # bool mask over columns
    init_basis: np.ndarray
    row_sign: np.ndarray   # +1 / -1 per std row (row was negated)
    orig_rows: np.ndarray  # std row -> original row index, -1 for bound rows
    var_map: list          # per original var: (offset, [(col, sign), ...])


def _standardize(lp: LinearProgram) -> _StdForm:
    A0 = lp.constraint_matrix
    m0, n0 = A0.shape
    cols = []
    costs = []
    var_map = []
    offsets = np.zeros(n0)
    bound_rows = []  # (struct col, rhs)
    for j in range(n0):
        lo, up = lp.lower[j], lp.upper[j]
        a = A0[:, j]
        if np.isfinite(lo):
            offsets[j] = lo
            k = len(cols)
            cols.append(a)
            costs.append(lp.objective[j])
            var_map.append((lo, [(k, 1.0)]))
            if np.isfinite(up):
                bound_rows.append((k, up - lo))
        elif np.isfinite(up):
            offsets[j] = up
            k = len(cols)
            cols.append(-a)
            costs.append(-lp.objective[j])
            var_map.append((up, [(k, -1.0)]))
        else:
            k = len(cols)
            cols.append(a)
            cols.append(-a)
            costs.extend([lp.objective[j], -lp.objective[j]])
            var_map.append((0.0, [(k, 1.0), (k + 1, -1.0)]))
    n_struct = len(cols)
    S = np.column_stack(cols) if cols else np.zeros((m0, 0))
    rhs = lp.rhs - A0 @ offsets

    # presolve: drop empty original rows (feasibility checked by caller)
    keep = [i for i in range(m0) if np.any(S[i] != 0.0)]
    senses = [lp.row_senses[i] for i in keep]
    rows = [S[i] for i in keep]
    rvals = [rhs[i] for i in keep]
    orig = list(keep)
    for k, val in bound_rows:
        r = np.zeros(n_struct)
        r[k] = 1.0
        rows.append(r)
        rvals.append(val)
        senses.append(Sense.LE)
        orig.append(-1)
    m = len(rows)
    M = np.array(rows).reshape(m, n_struct)
    b = np.array(rvals, dtype=float)

    n_slack = sum(1 for s in senses if s is not Sense.EQ)
    slack = np.zeros((m, n_slack))
    slack_of_row = np.full(m, -1)
    k = 0
    for i, s in enumerate(senses):
        if s is Sense.LE:
            slack[i, k] = 1.0
        elif s is Sense.GE:
            slack[i, k] = -1.0
        else:
            continue
        slack_of_row[i] = n_struct + k
        k += 1
    A = np.hstack([M, slack])
    row_sign = np.where(b < 0, -1.0, 1.0)
    A *= row_sign[:, None]
    b = b * row_sign

    basis = np.full(m, -1)
    need_art = []
    for i in range(m):
        sc = slack_of_row[i]
        if sc >= 0 and A[i, sc] > 0:
            basis[i] = sc
        else:
            need_art.append(i)
    art = np.zeros((m, len(need_art)))
    base = A.shape[1]
    for k, i in enumerate(need_art):
        art[i, k] = 1.0
        basis[i] = base + k
    A = np.hstack([A, art])
    c = np.concatenate([np.array(costs, dtype=float), np.zeros(A.shape[1] - n_struct)])
    artificial = np.zeros(A.shape[1], dtype=bool)
    artificial[base:] = True
    return _StdForm(A=A, b=b, c=c, n_struct=n_struct, artificial=artificial,
                    init_basis=basis, row_sign=row_sign, orig_rows=np.array(orig, dtype=int),
                    var_map=var_map)


# ---------------------------------------------------------------------------
# tableau machinery


def _pivot(T: np.ndarray, r: int, e: int) -> None:
    T[r] /= T[r, e]
    col = T[:, e].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _tableau_from_basis(std: _StdForm, basis: np.ndarray, cost: np.ndarray) -> np.ndarray:
    m, N = std.A.shape
    T = np.empty((m + 1, N + 1))
    if m:
        B = std.A[:, basis]
        T[:m, :N] = np.linalg.solve(B, std.A)
        T[:m, N] = np.linalg.solve(B, std.b)
    T[m, :N] = cost
    T[m, N] = 0.0
    if m:
        T[m] -= cost[basis] @ T[:m]
    return T


class _Limit(Exception):
    pass


def _run(T, basis, std, cost, allowed, tol, budget):
    """Primal simplex iterations on tableau T. Returns (status, pivots)."""
    m = T.shape[0] - 1
    N = T.shape[1] - 1
    degenerate = 0
    bland = False
    bland_after = 3 * (m + N)
    pivots = 0
    while True:
        d = T[m, :N]
        cand = allowed & (d < -tol.opt_tol)
        if not cand.any():
            return LpStatus.OPTIMAL, pivots
        if pivots >= budget:
            return LpStatus.ITERATION_LIMIT, pivots
        if bland:
            e = int(np.flatnonzero(cand)[0])
        else:
            e = int(np.argmin(np.where(cand, d, np.inf)))
        col = T[:m, e]
        pos = col > tol.pivot_tol
        if not pos.any():
            return LpStatus.UNBOUNDED, pivots
        rhs = np.maximum(T[:m, N], 0.0)
        ratios = np.full(m, np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + rmin))
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(col[ties])])
        _pivot(T, r, e)
        basis[r] = e
        pivots += 1
        if rmin <= tol.feas_tol:
            degenerate += 1
            if degenerate > bland_after:
                bland = True
        if pivots % REFACTOR_EVERY == 0:
            try:
                T[:] = _tableau_from_basis(std, basis, cost)
            except np.linalg.LinAlgError:
                pass


def _recover(std: _StdForm, lp: LinearProgram, basis: np.ndarray):
    m, N = std.A.shape
    xs = np.zeros(N)
    y_std = np.zeros(m)
    if m:
        B = std.A[:, basis]
        xs[basis] = np.linalg.solve(B, std.b)
        y_std = np.linalg.solve(B.T, std.c[basis])
    x = np.empty(lp.n_vars)
    for j, (off, parts) in enumerate(std.var_map):
        x[j] = off + sum(sgn * xs[k] for k, sgn in parts)
    # tiny basis noise can push bounded variables just outside their bounds
    x = np.clip(x, lp.lower, lp.upper)
    y = np.zeros(lp.n_rows)
    for i in range(m):
        o = std.orig_rows[i]
        if o >= 0:
            y[o] = y_std[i] * std.row_sign[i]
    rc = lp.objective - lp.constraint_matrix.T @ y
    return x, y, rc


def _empty_row_check(lp: LinearProgram, tol: LpTolerances) -> bool:
    A = lp.constraint_matrix
    for i in range(lp.n_rows):
        if np.any(A[i] != 0.0):
            continue
        b = lp.rhs[i]
        s = lp.row_senses[i]
        if (s is Sense.LE and b < -tol.feas_tol) or (s is Sense.GE and b > tol.feas_tol) \
                or (s is Sense.EQ and abs(b) > tol.feas_tol):
            return False
    return True


def _failed(lp, status, pivots=0):
    nan = np.full(lp.n_vars, np.nan)
    return LpSolution(status=status, primal=nan, dual=np.full(lp.n_rows, np.nan),
                      objective_value=(-np.inf if status is LpStatus.UNBOUNDED else np.nan),
                      reduced_costs=np.full(lp.n_vars, np.nan), iterations=pivots)


def solve_lp(lp: LinearProgram, iteration_limit: int = 50_000,
             basis: Optional[Sequence[int]] = None,
             tol: LpTolerances = LpTolerances()) -> LpSolution:
    """Solve ``lp`` with the two-phase primal simplex.

    Dantzig pricing is used until ``3 * (rows + cols)`` degenerate pivots have
    occurred, after which the solver switches to Bland's rule.  A ``basis``
    returned by an earlier solve of the same LP may be passed to skip phase 1.
    """
    if not _empty_row_check(lp, tol):
        return _failed(lp, LpStatus.INFEASIBLE)
    std = _standardize(lp)
    m, N = std.A.shape
    allowed = ~std.artificial
    total = 0

    T = None
    cur = None
    if basis is not None:
        cur = np.asarray(basis, dtype=int).copy()
        try:
            if cur.size != m or np.any(cur < 0) or np.any(cur >= N):
                raise np.linalg.LinAlgError
            T = _tableau_from_basis(std, cur, std.c)
            xb = T[:m, N]
            art_level = xb[std.artificial[cur]] if m else xb
            if np.any(xb < -tol.feas_tol) or np.any(np.abs(art_level) > tol.feas_tol):
                T = None
        except np.linalg.LinAlgError:
            T = None

    if T is None:
        cur = std.init_basis.copy()
        if std.artificial.any():
            cost1 = std.artificial.astype(float)
            T = _tableau_from_basis(std, cur, cost1)
            status, piv = _run(T, cur, std, cost1, np.ones(N, dtype=bool), tol, iteration_limit)
            total += piv
            if status is LpStatus.ITERATION_LIMIT:
                return _failed(lp, status, total)
            infeas = -T[m, N]
            if infeas > tol.feas_tol * (1.0 + np.abs(std.b).max(initial=0.0)):
                return _failed(lp, LpStatus.INFEASIBLE, total)
            # drive zero-level artificials out of the basis where possible
            for r in range(m):
                if not std.artificial[cur[r]]:
                    continue
                row = T[r, :N]
                cands = np.flatnonzero(allowed & (np.abs(row) > 1e-7))
                if cands.size:
                    e = int(cands[np.argmax(np.abs(row[cands]))])
                    _pivot(T, r, e)
                    cur[r] = e
        T = _tableau_from_basis(std, cur, std.c)

    status = LpStatus.OPTIMAL
    for _ in range(3):
        status, piv = _run(T, cur, std, std.c, allowed, tol, iteration_limit - total)
        total += piv
        if status is not LpStatus.OPTIMAL:
            break
        # confirm with a fresh factorization; resume if drift hid a candidate
        T = _tableau_from_basis(std, cur, std.c)
        if not (allowed & (T[m, :N] < -tol.opt_tol)).any():
            break
    if status is LpStatus.UNBOUNDED:
        return _failed(lp, status, total)
    if status is LpStatus.ITERATION_LIMIT:
        try:
            x, y, rc = _recover(std, lp, cur)
        except np.linalg.LinAlgError:
            return _failed(lp, status, total)
        return LpSolution(status=status, primal=x, dual=y,
                          objective_value=float(lp.objective @ x),
                          reduced_costs=rc, basis=tuple(int(k) for k in cur),
                          iterations=total)
    x, y, rc = _recover(std, lp, cur)
    return LpSolution(status=LpStatus.OPTIMAL, primal=x, dual=y,
                      objective_value=float(lp.objective @ x), reduced_costs=rc,
                      basis=tuple(int(k) for k in cur), iterations=total)


# ---------------------------------------------------------------------------
# certificates


def constraint_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest violation of rows and bounds at ``x``."""
    ax = lp.constraint_matrix @ x
    viol = [0.0]
    for i, s in enumerate(lp.row_senses):
        d = ax[i] - lp.rhs[i]
        if s is Sense.LE:
            viol.append(max(d, 0.0))
        elif s is Sense.GE:
            viol.append(max(-d, 0.0))
        else:
            viol.append(abs(d))
    viol.append(float(np.max(lp.lower - x, initial=0.0)))
    viol.append(float(np.max(x - lp.upper, initial=0.0)))
    return float(max(viol))


def dual_objective(lp: LinearProgram, dual: np.ndarray, opt_tol: float = OPT_TOL) -> float:
    """Lagrangian dual value for row multipliers ``dual``.

    Reduced costs are charged to whichever variable bound they price; a
    reduced cost pointing at an infinite bound gives ``-inf``.
    """
    rc = lp.objective - lp.constraint_matrix.T @ dual
    val = float(lp.rhs @ dual)
    for j, d in enumerate(rc):
        if d > opt_tol:
            if not np.isfinite(lp.lower[j]):
                return -np.inf
            val += d * lp.lower[j]
        elif d < -opt_tol:
            if not np.isfinite(lp.upper[j]):
                return -np.inf
            val += d * lp.upper[j]
        else:
            # near-zero reduced cost: charge the finite bound closest to zero cost
            b = lp.lower[j] if np.isfinite(lp.lower[j]) else lp.upper[j]
            if np.isfinite(b):
                val += d * b
    return val


def dual_sign_violation(lp: LinearProgram, dual: np.ndarray) -> float:
    """Largest multiplier with the wrong sign for a minimization problem."""
    worst = 0.0
    for i, s in enumerate(lp.row_senses):
        if s is Sense.LE:
            worst = max(worst, dual[i])
        elif s is Sense.GE:
            worst = max(worst, -dual[i])
    return worst


def dump_lp(lp: LinearProgram) -> str:
    """Fixed-column plain-text listing of an LP for debugging."""
    out = io.StringIO()
    out.write(f"LP {lp.n_rows} rows x {lp.n_vars} cols\n")
    out.write("OBJ   " + "".join(f"{v:>14.6g}" for v in lp.objective) + "\n")
    for i in range(lp.n_rows):
        out.write(f"R{i:<4d}" + "".join(f"{v:>14.6g}" for v in lp.constraint_matrix[i])
                  + f"  {lp.row_senses[i].value:>2s} {lp.rhs[i]:>14.6g}\n")
    out.write("LO    " + "".join(f"{v:>14.6g}" for v in lp.lower) + "\n")
    out.write("UP    " + "".join(f"{v:>14.6g}" for v in lp.upper) + "\n")
    return out.getvalue()
