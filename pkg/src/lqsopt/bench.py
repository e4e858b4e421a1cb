"""Algorithm dispatch and the relative-accuracy benchmark harness.

Every algorithm is scored by the LQS objective at its coefficients; the
relative accuracy of an algorithm on an instance is

    100 * (f_alg - f_best) / f_best

where f_best is the smallest objective among the algorithms compared on that
instance.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .datagen import named_example
from .errors import ValidationError
from .first_order import FirstOrderConfig
from .fits import (Dataset, _as_quantile, chebyshev_fit, lad_fit, least_squares_fit,
                   lqs_objective)
from .hybrid import InitStrategy, initial_points, multistart
from .mio import MioLimits, build_model, solve
from .oracle import DEFAULT_SUBSET_LIMIT, enumerate_lqs
from .seqlo import SeqLoConfig, sequential_lo

ALGORITHMS = ("lad", "cheb", "ls", "subgrad", "seqlo", "hybrid", "hybrid-large", "mio",
              "mio-warm")
FIT_ALGORITHMS = ALGORITHMS[:7]


@dataclass
class AlgoRun:
    algo: str
    beta: np.ndarray
    objective: float
    init_time_s: float
    solve_time_s: float
    info: dict = field(default_factory=dict)

    @property
    def total_time_s(self) -> float:
        return self.init_time_s + self.solve_time_s


def relative_accuracy(f_alg: float, f_best: float) -> float:
    if f_best == 0.0:
        return 0.0 if f_alg == 0.0 else math.inf
    return (f_alg - f_best) / f_best * 100.0


def run_algorithm(data: Dataset, q, algo: str, init: InitStrategy = InitStrategy(),
                  fo_cfg: FirstOrderConfig = FirstOrderConfig(),
                  slo_cfg: SeqLoConfig = SeqLoConfig(),
                  mio_limits: MioLimits = MioLimits(), warm_start=None,
                  workers: int = 1) -> AlgoRun:
    """Run one named algorithm; timings cover the computation only."""
    q = _as_quantile(q).check(data.n)
    if algo not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    info: dict = {}
    t0 = time.perf_counter()
    if algo in ("lad", "cheb", "ls"):
        fit = {"lad": lad_fit, "cheb": chebyshev_fit, "ls": least_squares_fit}[algo](data)
        t1 = time.perf_counter()
        return AlgoRun(algo, fit.beta, lqs_objective(data, fit.beta, q), 0.0, t1 - t0,
                       {"fit_objective": fit.objective})
    if algo in ("subgrad", "seqlo", "hybrid"):
        starts = initial_points(data, q, init)
        t1 = time.perf_counter()
        res = multistart(data, q, starts, algo, fo_cfg, slo_cfg, workers)
        t2 = time.perf_counter()
        info = {k: res.info[k] for k in ("start_index", "seqlo_calls") if k in res.info}
        return AlgoRun(algo, res.beta, res.objective, t1 - t0, t2 - t1, info)
    if algo == "hybrid-large":
        starts = initial_points(data, q, init)
        t1 = time.perf_counter()
        res = multistart(data, q, starts, "subgrad", fo_cfg, slo_cfg, workers)
        res = sequential_lo(data, q, res.beta, slo_cfg)
        t2 = time.perf_counter()
        return AlgoRun(algo, res.beta, res.objective, t1 - t0, t2 - t1, {"seqlo_calls": 1})
    # MIO variants
    init_time = 0.0
    if algo == "mio-warm" and warm_start is None:
        warm = run_algorithm(data, q, "hybrid", init, fo_cfg, slo_cfg, workers=workers)
        warm_start, init_time = warm.beta, warm.total_time_s
    t1 = time.perf_counter()
    res = solve(build_model(data, q), warm_start=warm_start, limits=mio_limits)
    t2 = time.perf_counter()
    info = {"upper_bound": res.upper_bound, "lower_bound": res.lower_bound, "gap": res.gap,
            "status": res.status, "nodes": res.nodes_explored}
    beta = res.incumbent_beta if res.incumbent_beta is not None else np.zeros(data.p)
    return AlgoRun(algo, beta, lqs_objective(data, beta, q), init_time, t2 - t1, info)


def _mean_se(v: Sequence[float]):
    a = np.asarray(v, dtype=float)
    if a.size == 0:
        return math.nan, math.nan
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return float(a.mean()), se


def run_bench(example: str, algos: Sequence[str], instances: int = 20, seed: int = 0,
              scale: Optional[int] = None, init: InitStrategy = InitStrategy(),
              fo_cfg: FirstOrderConfig = FirstOrderConfig(),
              slo_cfg: SeqLoConfig = SeqLoConfig(), mio_limits: MioLimits = MioLimits(),
              oracle: bool = False, workers: int = 1) -> dict:
    """Run ``algos`` on ``instances`` seeded draws of a named example.

    Instance r uses data seed ``seed + r``.  When the hybrid runs before
    mio-warm on the same instance its coefficients are reused as warm start.
    """
    algos = list(algos)
    if not algos:
        raise ValidationError("need at least one algorithm")
    for a in algos:
        if a not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {a!r}")
    if instances < 1:
        raise ValidationError("instances must be >= 1")
    per_instance: List[Dict[str, AlgoRun]] = []
    oracle_values: List[Optional[float]] = []
    meta = None
    for r in range(instances):
        data, q, meta = named_example(example, scale, seed=seed + r)
        runs: Dict[str, AlgoRun] = {}
        for a in algos:
            warm = runs["hybrid"].beta if (a == "mio-warm" and "hybrid" in runs) else None
            run = run_algorithm(data, q, a, init, fo_cfg, slo_cfg, mio_limits, warm, workers)
            if warm is not None:
                run.init_time_s = runs["hybrid"].total_time_s
            runs[a] = run
        per_instance.append(runs)
        ov = None
        if oracle and math.comb(data.n, q.q) <= DEFAULT_SUBSET_LIMIT:
            ov = enumerate_lqs(data, q).objective
        oracle_values.append(ov)
    rows = []
    for a in algos:
        acc, acc_or = [], []
        for runs, ov in zip(per_instance, oracle_values):
            f_best = min(x.objective for x in runs.values())
            acc.append(relative_accuracy(runs[a].objective, f_best))
            if ov is not None:
                acc_or.append(relative_accuracy(runs[a].objective, ov))
        m, se = _mean_se(acc)
        row = {"algo": a, "rel_acc_mean": m, "rel_acc_se": se,
               "objective_mean": float(np.mean([x[a].objective for x in per_instance])),
               "init_time_mean_s": float(np.mean([x[a].init_time_s for x in per_instance])),
               "solve_time_mean_s": float(np.mean([x[a].solve_time_s for x in per_instance])),
               "total_time_mean_s": float(np.mean([x[a].total_time_s for x in per_instance]))}
        if oracle:
            om, ose = _mean_se(acc_or)
            row["rel_acc_oracle_mean"], row["rel_acc_oracle_se"] = om, ose
        rows.append(row)
    return {"example": meta["name"], "n": meta["n"], "p": meta["p"], "q": meta["q"],
            "instances": instances, "rows": rows,
            "objectives": [{a: x[a].objective for a in algos} for x in per_instance]}


def write_table(bench: dict, path) -> None:
    rows = bench["rows"]
    cols = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["example", "n", "p", "q"] + cols)
        for row in rows:
            w.writerow([bench["example"], bench["n"], bench["p"], bench["q"]]
                       + [row[c] if isinstance(row[c], str) else repr(float(row[c])) for c in cols])
