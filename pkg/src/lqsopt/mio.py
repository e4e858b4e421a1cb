"""Exact LQS by branch-and-bound over the binary selection vector z.

z_i = 1 marks the samples whose absolute residual is at most |r_(q)|.  A node
fixes some z_i to one (``fixed_one``) and some to zero (``fixed_zero``); a
node with q ones is a leaf whose value is the Chebyshev fit of those samples.

Node bounds combine

* the Big-M LP relaxation (z in [0, 1]) of the selection model, and
* the Chebyshev value of ``fixed_one``: every completion contains it.

Without a box on beta the per-sample Big-M constants for mu are unbounded;
the LP relaxation then collapses to the Chebyshev bound, so the solver skips
it and works with the combinatorial bound alone.
"""

from __future__ import annotations

import csv
import heapq
import io
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import NumericalError, ValidationError
from .fits import (Dataset, Polyhedron, QuantileSpec, _as_quantile, chebyshev_fit,
                   lqs_objective)
from .lp import LinearProgram, LpStatus, Sense, solve_lp

log = logging.getLogger(__name__)

GAP_EPS = 1e-12
LP_BOUND_SLACK = 1e-9
TRACE_HEADER = ("wall_time_s", "upper_bound", "lower_bound")


@dataclass(frozen=True)
class Box:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))
        if self.radius < 0:
            raise ValidationError("box radius must be nonnegative")

    def polyhedron(self) -> Polyhedron:
        return Polyhedron.box(self.center, self.radius)


@dataclass
class MioModel:
    data: Dataset
    q: QuantileSpec
    box: Optional[Box] = None
    polyhedral: Optional[Polyhedron] = None
    # per-sample constants: mu_i <= M_l[i] (1 - z_i); mu_bar_i <= M_u z_i
    m_lower: np.ndarray = None
    m_upper_default: float = math.inf
    residual_bound: Optional[np.ndarray] = None
    sos1_sets: List[Tuple[str, str, int]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def p(self) -> int:
        return self.data.p

    @property
    def constraints(self) -> Optional[Polyhedron]:
        """Box and polyhedral rows on beta as one ``A beta <= b`` system."""
        if self.box is None:
            return self.polyhedral
        return self.box.polyhedron().stack(self.polyhedral)

    def variable_layout(self) -> dict:
        """Column slices of the relaxation LP, in order
        (gamma, beta, r+, r-, mu, mu_bar, z)."""
        n, p = self.n, self.p
        out, start = {}, 0
        for name, size in (("gamma", 1), ("beta", p), ("r_plus", n), ("r_minus", n),
                           ("mu", n), ("mu_bar", n), ("z", n)):
            out[name] = slice(start, start + size)
            start += size
        return out


def build_model(data: Dataset, q, box: Optional[Box] = None,
                polyhedral: Optional[Polyhedron] = None) -> MioModel:
    q = _as_quantile(q).check(data.n)
    n, p = data.n, data.p
    if polyhedral is not None and polyhedral.A.shape[1] != p:
        raise ValidationError(f"polyhedral A has {polyhedral.A.shape[1]} columns, expected p={p}")
    if box is not None and box.center.size != p:
        raise ValidationError(f"box center has length {box.center.size}, expected p={p}")
    sos = ([("mu_bar", "mu", i) for i in range(n)]
           + [("r_plus", "r_minus", i) for i in range(n)]
           + [("z", "mu", i) for i in range(n)])
    if box is not None:
        R = np.abs(data.residuals(box.center)) + box.radius * np.abs(data.X).sum(axis=1)
        m_lower = R
        m_upper = float(R.max())
    else:
        R = None
        m_lower = np.full(n, np.inf)
        m_upper = math.inf
    return MioModel(data=data, q=q, box=box, polyhedral=polyhedral, m_lower=m_lower,
                    m_upper_default=m_upper, residual_bound=R, sos1_sets=sos)


@dataclass(frozen=True)
class BnbNode:
    fixed_one: frozenset = frozenset()
    fixed_zero: frozenset = frozenset()
    lp_bound: float = 0.0
    depth: int = 0

    def __post_init__(self):
        if self.fixed_one & self.fixed_zero:
            raise ValidationError("a sample cannot be fixed to both 0 and 1")


@dataclass
class TraceEvent:
    wall_time: float
    upper_bound: float
    lower_bound: float


class MioStatus:
    PROVED_OPTIMAL = "ProvedOptimal"
    TIME_LIMIT = "TimeLimit"
    NODE_LIMIT = "NodeLimit"


@dataclass
class MioResult:
    incumbent_beta: Optional[np.ndarray]
    upper_bound: float
    lower_bound: float
    gap: float
    status: str
    nodes_explored: int
    trace: List[TraceEvent]
    incumbent_subset: Optional[tuple] = None
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MioLimits:
    time_limit: float = 60.0
    node_limit: int = 1_000_000
    gap_tol: float = 1e-6
    # depth up to which the Big-M LP relaxation is solved (box models only)
    lp_depth: int = 0


def relative_gap(ub: float, lb: float) -> float:
    if not math.isfinite(ub):
        return math.inf
    return max(ub - lb, 0.0) / max(ub, GAP_EPS)


# ---------------------------------------------------------------------------
# node evaluation


@dataclass
class NodeEval:
    bound: float
    beta: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    cheb_bound: float = 0.0
    lp_bound: Optional[float] = None
    lp_failed: bool = False
    infeasible: bool = False
    leaf: bool = False


def relaxation_lp(model: MioModel, node: BnbNode, m_upper: float = math.inf) -> LinearProgram:
    """Big-M LP relaxation at ``node`` (z relaxed to [0, 1], fixings honored)."""
    data = model.data
    n, p, q = model.n, model.p, model.q.q
    L = model.variable_layout()
    nv = 1 + p + 5 * n
    rows, rhs, senses = [], [], []

    def row():
        return np.zeros(nv)

    X, y = data.X, data.y
    g, b = L["gamma"].start, L["beta"]
    rp, rm, mu, mb, z = (L[k].start for k in ("r_plus", "r_minus", "mu", "mu_bar", "z"))
    M_l = model.m_lower
    for i in range(n):
        a = row()  # r+ - r- + x'beta = y
        a[rp + i], a[rm + i] = 1.0, -1.0
        a[b] = X[i]
        rows.append(a); rhs.append(y[i]); senses.append(Sense.EQ)
        a = row()  # gamma >= |r| - mu
        a[g], a[rp + i], a[rm + i], a[mu + i] = 1.0, -1.0, -1.0, 1.0
        rows.append(a); rhs.append(0.0); senses.append(Sense.GE)
        a = row()  # |r| + mu_bar >= gamma
        a[rp + i], a[rm + i], a[mb + i], a[g] = 1.0, 1.0, 1.0, -1.0
        rows.append(a); rhs.append(0.0); senses.append(Sense.GE)
        a = row()  # gamma >= mu_bar
        a[g], a[mb + i] = 1.0, -1.0
        rows.append(a); rhs.append(0.0); senses.append(Sense.GE)
        if math.isfinite(m_upper):
            a = row()  # mu_bar <= M_u z
            a[mb + i], a[z + i] = 1.0, -m_upper
            rows.append(a); rhs.append(0.0); senses.append(Sense.LE)
        if math.isfinite(M_l[i]):
            a = row()  # mu <= M_l (1 - z)
            a[mu + i], a[z + i] = 1.0, M_l[i]
            rows.append(a); rhs.append(M_l[i]); senses.append(Sense.LE)
    a = row()
    a[z:z + n] = 1.0
    rows.append(a); rhs.append(float(q)); senses.append(Sense.EQ)
    cons = model.constraints
    if cons is not None:
        for k in range(cons.A.shape[0]):
            a = row()
            a[b] = cons.A[k]
            rows.append(a); rhs.append(cons.b[k]); senses.append(Sense.LE)
    c = row()
    c[g] = 1.0
    lo = np.zeros(nv)
    up = np.full(nv, np.inf)
    lo[b] = -np.inf
    up[z:z + n] = 1.0
    for i in node.fixed_one:
        lo[z + i] = 1.0
        if not math.isfinite(M_l[i]):
            up[mu + i] = 0.0
    for i in node.fixed_zero:
        up[z + i] = 0.0
        if not math.isfinite(m_upper):
            up[mb + i] = 0.0
    return LinearProgram(c, np.array(rows), senses, np.array(rhs), lo, up)


def _leaf_set(model: MioModel, node: BnbNode) -> Optional[frozenset]:
    q, n = model.q.q, model.n
    if len(node.fixed_one) == q:
        return node.fixed_one
    if len(node.fixed_zero) == n - q:
        return frozenset(range(n)) - node.fixed_zero
    return None


def _cheb(model: MioModel, subset) -> Tuple[float, Optional[np.ndarray]]:
    """Constrained Chebyshev value on ``subset``; (inf, None) if infeasible."""
    subset = sorted(subset)
    cons = model.constraints
    if not subset:
        # any feasible beta will do; zero residual constraints
        if cons is None:
            return 0.0, np.zeros(model.p)
        sol = solve_lp(LinearProgram(np.zeros(model.p), cons.A, [Sense.LE] * cons.A.shape[0],
                                     cons.b, np.full(model.p, -np.inf), None))
        if not sol.optimal:
            return math.inf, None
        return 0.0, sol.primal
    try:
        fit = chebyshev_fit(model.data, subset, cons)
    except NumericalError:
        return math.inf, None
    return fit.objective, fit.beta


def evaluate_node(model: MioModel, node: BnbNode, m_upper: Optional[float] = None,
                  use_lp: Optional[bool] = None) -> NodeEval:
    """Lower bound for the subtree rooted at ``node``.

    ``use_lp`` defaults to solving the Big-M relaxation whenever the model has
    finite Big-M constants.
    """
    leaf = _leaf_set(model, node)
    if leaf is not None:
        t, beta = _cheb(model, leaf)
        return NodeEval(bound=t, beta=beta, cheb_bound=t, infeasible=not math.isfinite(t),
                        leaf=True)
    t, beta = _cheb(model, node.fixed_one)
    ev = NodeEval(bound=t, beta=beta, cheb_bound=t, infeasible=not math.isfinite(t))
    if ev.infeasible:
        return ev
    finite_m = bool(np.all(np.isfinite(model.m_lower)))
    if use_lp is None:
        use_lp = finite_m
    if use_lp:
        mu_ = model.m_upper_default if m_upper is None else m_upper
        sol = solve_lp(relaxation_lp(model, node, mu_))
        if sol.optimal:
            L = model.variable_layout()
            # shave the LP feasibility tolerance so round-off never overstates the bound
            v = sol.objective_value
            ev.lp_bound = max(v - LP_BOUND_SLACK * (1.0 + abs(v)), 0.0)
            ev.z = sol.primal[L["z"]]
            if ev.lp_bound > ev.bound:
                ev.bound = ev.lp_bound
        elif sol.status is LpStatus.INFEASIBLE:
            # no completion has |r_(q)| <= M_u
            ev.lp_bound = math.inf
            ev.bound = math.inf
        else:
            ev.lp_failed = True
            log.warning("node LP ended with status %s; using Chebyshev bound", sol.status.value)
    return ev


def node_relaxation(model: MioModel, node: BnbNode, m_upper: Optional[float] = None) -> float:
    """max(Big-M LP bound, Chebyshev bound on fixed_one); exact at leaves."""
    return evaluate_node(model, node, m_upper, use_lp=None if _leaf_set(model, node) is None else False).bound


# ---------------------------------------------------------------------------
# search


def _kth_free(model: MioModel, node: BnbNode, beta: np.ndarray) -> float:
    """Value of F plus the best free completion at a fixed beta."""
    k = model.q.q - len(node.fixed_one)
    free = [i for i in range(model.n) if i not in node.fixed_one and i not in node.fixed_zero]
    a = np.abs(model.data.residuals(beta)[free])
    return float(np.partition(a, k - 1)[k - 1])


def _branch_index(model: MioModel, node: BnbNode, ev: NodeEval,
                  ref_beta: Optional[np.ndarray]) -> int:
    free = np.array([i for i in range(model.n)
                     if i not in node.fixed_one and i not in node.fixed_zero])
    if ev.z is not None:
        frac = np.abs(ev.z[free] - 0.5)
        k = int(np.argmin(frac))
        if frac[k] < 0.5 - 1e-6:
            return int(free[k])
    beta = ev.beta
    if beta is None or (len(node.fixed_one) < model.p and ref_beta is not None):
        beta = ref_beta if ref_beta is not None else np.zeros(model.p)
    a = np.abs(model.data.residuals(beta)[free])
    return int(free[int(np.argmax(a))])


def _feasible(model: MioModel, beta) -> bool:
    cons = model.constraints
    return cons is None or cons.contains(beta, 1e-9)


def solve(model: MioModel, warm_start=None, limits: MioLimits = MioLimits(),
          on_event=None) -> MioResult:
    """Best-bound branch-and-bound; returns incumbent, bounds and trace."""
    t0 = time.perf_counter()
    q = model.q.q
    data = model.data
    trace: List[TraceEvent] = []
    ub, best_beta = math.inf, None
    lb = 0.0

    def emit():
        ev = TraceEvent(time.perf_counter() - t0, ub, lb)
        trace.append(ev)
        if on_event is not None:
            on_event(ev)

    def offer(beta):
        nonlocal ub, best_beta
        if beta is None or not _feasible(model, beta):
            return False
        f = lqs_objective(data, beta, q)
        if f < ub:
            ub, best_beta = f, np.asarray(beta, dtype=float).copy()
            return True
        return False

    if warm_start is not None:
        w = np.asarray(warm_start, dtype=float).reshape(-1)
        if w.size != model.p:
            raise ValidationError(f"warm start has length {w.size}, expected p={model.p}")
        if not offer(w):
            log.warning("warm start violates the beta constraints; ignored")
    emit()

    root = BnbNode()
    counter = itertools.count()
    nodes = 0
    pruned_min = math.inf   # smallest bound among nodes closed by the gap tolerance
    heap = []

    def m_upper_now():
        return min(ub, model.m_upper_default)

    def process(node: BnbNode, parent_bound: float):
        """Evaluate; return NodeEval or None when the node is closed."""
        nonlocal nodes
        nodes += 1
        use_lp = node.depth <= limits.lp_depth and bool(np.all(np.isfinite(model.m_lower)))
        ev = evaluate_node(model, node, m_upper_now(), use_lp=use_lp)
        ev.bound = max(ev.bound, parent_bound)
        improved = False
        if ev.beta is not None:
            improved = offer(ev.beta)
        if ev.leaf or ev.infeasible:
            return None, improved
        kth = _kth_free(model, node, ev.beta)
        if kth <= ev.cheb_bound:
            # F plus its k best free samples already attain the Chebyshev bound
            return None, improved
        return ev, improved

    ev, _ = process(root, 0.0)
    root_bound = ub if ev is None else min(ev.bound, ub)
    if ev is None:
        lb = ub
    else:
        lb = min(ev.bound, ub)
        heapq.heappush(heap, (ev.bound, next(counter), root, ev))
    emit()

    status = None
    while True:
        gap = relative_gap(ub, lb)
        if not heap or gap <= limits.gap_tol:
            status = MioStatus.PROVED_OPTIMAL if gap <= limits.gap_tol or not heap else None
            break
        if time.perf_counter() - t0 > limits.time_limit:
            status = MioStatus.TIME_LIMIT
            break
        if nodes >= limits.node_limit:
            status = MioStatus.NODE_LIMIT
            break
        bound, _, node, ev = heapq.heappop(heap)
        if bound >= ub * (1.0 - limits.gap_tol):
            if bound < ub:
                pruned_min = min(pruned_min, bound)
            continue
        j = _branch_index(model, node, ev, best_beta)
        children = (BnbNode(node.fixed_one | {j}, node.fixed_zero, bound, node.depth + 1),
                    BnbNode(node.fixed_one, node.fixed_zero | {j}, bound, node.depth + 1))
        ub_improved = False
        for child in children:
            cev, imp = process(child, bound)
            ub_improved |= imp
            if cev is None:
                continue
            if cev.bound >= ub * (1.0 - limits.gap_tol):
                if cev.bound < ub:
                    pruned_min = min(pruned_min, cev.bound)
                continue
            heapq.heappush(heap, (cev.bound, next(counter), child, cev))
        open_min = heap[0][0] if heap else math.inf
        new_lb = max(lb, min(open_min, pruned_min, ub))
        if ub_improved or new_lb > lb:
            lb = new_lb
            emit()
    if status is None:
        status = MioStatus.PROVED_OPTIMAL
    if status == MioStatus.PROVED_OPTIMAL and not heap:
        lb = max(lb, min(pruned_min, ub))
    lb = min(lb, ub)
    gap = relative_gap(ub, lb)
    if status == MioStatus.PROVED_OPTIMAL and gap > limits.gap_tol:
        status = MioStatus.NODE_LIMIT
    last = trace[-1]
    if last.upper_bound != ub or last.lower_bound != lb:
        emit()
    subset = None
    if best_beta is not None:
        subset = tuple(int(i) for i in selected_subset(data, best_beta, q))
    return MioResult(incumbent_beta=best_beta, upper_bound=ub, lower_bound=lb, gap=gap,
                     status=status, nodes_explored=nodes, trace=trace,
                     incumbent_subset=subset,
                     info={"wall_time_s": time.perf_counter() - t0, "root_bound": root_bound})


def selected_subset(data: Dataset, beta, q: int) -> np.ndarray:
    """The q samples with smallest |r_i| (ties to the smaller index)."""
    a = np.abs(data.residuals(beta))
    order = np.lexsort((np.arange(a.size), a))
    return np.sort(order[:q])


def reconstruct_solution(model: MioModel, beta) -> dict:
    """Integral (gamma, r+, r-, mu, mu_bar, z) consistent with ``beta``."""
    data, q = model.data, model.q.q
    r = data.residuals(beta)
    a = np.abs(r)
    S = selected_subset(data, beta, q)
    z = np.zeros(model.n)
    z[S] = 1.0
    gamma = float(np.max(a[S]))
    mu = np.where(z == 1.0, 0.0, np.maximum(a - gamma, 0.0))
    mu_bar = np.where(z == 1.0, np.maximum(gamma - a, 0.0), 0.0)
    return {"gamma": gamma, "beta": np.asarray(beta, dtype=float),
            "r_plus": np.maximum(r, 0.0), "r_minus": np.maximum(-r, 0.0),
            "mu": mu, "mu_bar": mu_bar, "z": z}


def sos1_violation(model: MioModel, sol: dict) -> float:
    """Largest product over the SOS-1 pairs (zero when all sets hold)."""
    worst = 0.0
    for a, b, i in model.sos1_sets:
        worst = max(worst, abs(sol[a][i] * sol[b][i]))
    return worst


def write_trace(trace: Sequence[TraceEvent], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for ev in trace:
        w.writerow([f"{ev.wall_time:.6f}", repr(float(ev.upper_bound)), repr(float(ev.lower_bound))])


def solve_with_evolution(model: MioModel, warm_start=None, limits: MioLimits = MioLimits(),
                         trace_path=None) -> Tuple[MioResult, str]:
    """Solve and stream every bound improvement to a CSV trace.

    Returns the result and the trace text; when ``trace_path`` is given the
    rows are also written to that file as they occur.
    """
    buf = io.StringIO()
    fh = open(trace_path, "w", encoding="utf-8", newline="") if trace_path else None
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    if fh:
        fh.write(buf.getvalue())
        fh.flush()

    def on_event(ev: TraceEvent):
        line = f"{ev.wall_time:.6f},{float(ev.upper_bound)!r},{float(ev.lower_bound)!r}\n"
        buf.write(line)
        if fh:
            fh.write(line)
            fh.flush()

    try:
        res = solve(model, warm_start, limits, on_event=on_event)
    finally:
        if fh:
            fh.close()
    return res, buf.getvalue()


def dump_model(model: MioModel) -> str:
    """Plain-text listing of the model rows and bounds for debugging."""
    from .lp import dump_lp
    head = (f"MIO n={model.n} p={model.p} q={model.q.q} box={model.box is not None} "
            f"polyhedral={model.polyhedral is not None} sos1={len(model.sos1_sets)}\n")
    return head + dump_lp(relaxation_lp(model, BnbNode(), model.m_upper_default))
