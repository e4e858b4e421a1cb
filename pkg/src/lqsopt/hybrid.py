"""Initialization strategies and multi-start drivers.

The hybrid method runs subdifferential descent from each start and polishes
the result with sequential LO; the large-scale variant polishes only the best
descent result.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .first_order import FirstOrderConfig, subdifferential_descent
from .fits import (Dataset, FitResult, _as_quantile, chebyshev_fit,
                   lad_fit, lqs_objective)
from .seqlo import SeqLoConfig, sequential_lo

log = logging.getLogger(__name__)


class InitKind(str, enum.Enum):
    LAD_PERTURBED = "lad"
    CHEB_SUBSAMPLE = "cheb"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class InitStrategy:
    kind: InitKind = InitKind.LAD_PERTURBED
    eta: float = 2.0
    runs: int = 100
    subsamples_per_run: int = 40
    seed: int = 0
    points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", InitKind(self.kind))
        if self.eta < 0:
            raise ValidationError("eta must be nonnegative")
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        if self.subsamples_per_run < 1:
            raise ValidationError("subsamples_per_run must be >= 1")
        if self.kind is InitKind.EXPLICIT and not self.points:
            raise ValidationError("explicit strategy needs at least one point")


def lad_perturbed_init(data: Dataset, strategy: InitStrategy,
                       lad_beta: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """LAD solution followed by ``runs - 1`` uniform draws from its eta-box."""
    if strategy.kind is not InitKind.LAD_PERTURBED:
        raise ValidationError("strategy kind must be LAD_PERTURBED")
    b = lad_fit(data).beta if lad_beta is None else np.asarray(lad_beta, dtype=float)
    rng = np.random.default_rng(strategy.seed)
    half = strategy.eta * np.abs(b)
    out = [b.copy()]
    for _ in range(strategy.runs - 1):
        out.append(rng.uniform(b - half, b + half))
    return out


def _rank_ok(X: np.ndarray) -> bool:
    return np.linalg.matrix_rank(X) == X.shape[1]


def cheb_subsample_init(data: Dataset, q, strategy: InitStrategy,
                        rng: Optional[np.random.Generator] = None,
                        max_retries: int = 10) -> np.ndarray:
    """Best (by LQS objective) Chebyshev fit over random (p+1)-subsamples.

    When ``subsamples_per_run`` covers every (p+1)-subset, all subsets are
    enumerated in lexicographic order instead of sampled.
    """
    q = _as_quantile(q).check(data.n)
    n, p = data.n, data.p
    if n < p + 1:
        raise ValidationError("Chebyshev initialization needs n >= p + 1")
    if rng is None:
        rng = np.random.default_rng(strategy.seed)
    total = math.comb(n, p + 1)
    if strategy.subsamples_per_run >= total:
        subsets = itertools.combinations(range(n), p + 1)
    else:
        subsets = _random_subsets(data, rng, strategy.subsamples_per_run, max_retries)
    best_beta, best_f = None, np.inf
    for J in subsets:
        beta = chebyshev_fit(data, J).beta
        f = lqs_objective(data, beta, q)
        if f < best_f:
            best_beta, best_f = beta, f
    return best_beta


def _random_subsets(data, rng, count, max_retries):
    n, p = data.n, data.p
    for _ in range(count):
        for attempt in range(max_retries + 1):
            J = np.sort(rng.choice(n, size=p + 1, replace=False))
            if _rank_ok(data.X[J]):
                break
            log.debug("skipping rank-deficient subsample %s", J.tolist())
        yield J


def initial_points(data: Dataset, q, strategy: InitStrategy) -> List[np.ndarray]:
    if strategy.kind is InitKind.LAD_PERTURBED:
        return lad_perturbed_init(data, strategy)
    if strategy.kind is InitKind.CHEB_SUBSAMPLE:
        rng = np.random.default_rng(strategy.seed)
        return [cheb_subsample_init(data, q, strategy, rng) for _ in range(strategy.runs)]
    pts = [np.asarray(b, dtype=float).reshape(-1) for b in strategy.points]
    for b in pts:
        if b.size != data.p:
            raise ValidationError(f"explicit start has length {b.size}, expected {data.p}")
    return pts


def _pmap(fn: Callable, items: Sequence, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _argbest(results: Sequence[FitResult]) -> int:
    # lowest index wins ties, so the reduction is order independent
    return min(range(len(results)), key=lambda i: (results[i].objective, i))


def multistart(data: Dataset, q, starts: Sequence[np.ndarray], algo: str,
               fo_cfg: FirstOrderConfig = FirstOrderConfig(),
               slo_cfg: SeqLoConfig = SeqLoConfig(), workers: int = 1) -> FitResult:
    """Run one of 'subgrad', 'seqlo', 'hybrid' from every start and keep the best."""
    q = _as_quantile(q).check(data.n)

    def one(b):
        if algo == "subgrad":
            return subdifferential_descent(data, q, b, fo_cfg)
        if algo == "seqlo":
            return sequential_lo(data, q, b, slo_cfg)
        if algo == "hybrid":
            fo = subdifferential_descent(data, q, b, fo_cfg)
            res = sequential_lo(data, q, fo.beta, slo_cfg)
            res.info["first_stage_objective"] = fo.objective
            return res
        raise ValidationError(f"unknown algorithm {algo!r}")

    results = _pmap(one, list(starts), workers)
    k = _argbest(results)
    best = results[k]
    best.info = dict(best.info, start_index=k,
                     start_objectives=[r.objective for r in results],
                     seqlo_calls=len(results) if algo in ("seqlo", "hybrid") else 0)
    if algo == "hybrid":
        best.info["first_stage_objectives"] = [r.info["first_stage_objective"] for r in results]
    return best


def hybrid(data: Dataset, q, init: InitStrategy = InitStrategy(),
           fo_cfg: FirstOrderConfig = FirstOrderConfig(),
           slo_cfg: SeqLoConfig = SeqLoConfig(), workers: int = 1) -> FitResult:
    """Descent then sequential LO from every initialization; best result wins."""
    starts = initial_points(data, q, init)
    res = multistart(data, q, starts, "hybrid", fo_cfg, slo_cfg, workers)
    res.info["algorithm"] = "hybrid"
    return res


def hybrid_large_scale(data: Dataset, q, init: InitStrategy = InitStrategy(),
                       fo_cfg: FirstOrderConfig = FirstOrderConfig(),
                       slo_cfg: SeqLoConfig = SeqLoConfig(), workers: int = 1) -> FitResult:
    """Descent from every start, then a single sequential-LO polish of the best."""
    starts = initial_points(data, q, init)
    fo = multistart(data, q, starts, "subgrad", fo_cfg, slo_cfg, workers)
    res = sequential_lo(data, q, fo.beta, slo_cfg)
    res.info = dict(res.info, algorithm="hybrid-large", seqlo_calls=1,
                    first_stage_objective=fo.objective,
                    first_stage_objectives=fo.info["start_objectives"],
                    start_index=fo.info["start_index"])
    return res
