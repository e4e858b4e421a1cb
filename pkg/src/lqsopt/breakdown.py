"""Breakdown probes for the LQS objective value.

Replacing m = n - q samples cannot move the optimal objective past the
Chebyshev value of the best q-subset among the untouched rows.  One more
replacement lets the objective diverge.  The probe checks both sides with a
certified global solver on each rung of a magnitude ladder.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .fits import Dataset, _as_quantile
from .mio import MioLimits, MioStatus, build_model, solve
from .oracle import DEFAULT_SUBSET_LIMIT, enumerate_lqs

REPORT_SCHEMA = "lqs-breakdown/1"
DRIFT_TOL = 1e-6


def replacement_set(n: int, m: int, seed: int) -> np.ndarray:
    if not 0 <= m <= n:
        raise ValidationError(f"m={m} must lie in 0..{n}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.permutation(n)[:m])


def perturb(data: Dataset, m: int, magnitude: float, seed: int = 0,
            covariates: bool = False) -> Dataset:
    """Shift the responses of m random rows by ``+magnitude``.

    With ``covariates=True`` the first covariate of those rows is shifted by
    the same amount as well.
    """
    idx = replacement_set(data.n, m, seed)
    y = data.y.copy()
    X = data.X.copy()
    y[idx] += magnitude
    if covariates:
        X[idx, 0] += magnitude
    return Dataset(y, X, data.row_ids)


def breakdown_fraction(n: int, q: int) -> Fraction:
    return Fraction(n - q + 1, n)


def certified_objective(data: Dataset, q: int, subset_limit: int = DEFAULT_SUBSET_LIMIT,
                        mio_limits: Optional[MioLimits] = None) -> float:
    """Global LQS optimum: enumeration when feasible, else a proved B&B run."""
    if math.comb(data.n, q) <= subset_limit:
        return enumerate_lqs(data, q, subset_limit).objective
    if mio_limits is None:
        raise ValidationError(
            f"C({data.n}, {q}) exceeds the enumeration limit and no MIO limits were given")
    res = solve(build_model(data, q), limits=mio_limits)
    if res.status != MioStatus.PROVED_OPTIMAL:
        raise ValidationError("no certified optimum within the MIO limits")
    return res.upper_bound


def breakdown_probe(data: Dataset, q, magnitudes: Sequence[float] = (1e3, 1e6, 1e9),
                    trials: int = 1, seed: int = 0, covariates: bool = False,
                    subset_limit: int = DEFAULT_SUBSET_LIMIT,
                    mio_limits: Optional[MioLimits] = None) -> dict:
    """JSON-ready report for m = n - q (bounded) and m = n - q + 1 (diverging)."""
    q = _as_quantile(q).check(data.n).q
    n = data.n
    mags = [float(v) for v in magnitudes]
    if not mags or any(b <= a for a, b in zip(mags, mags[1:])) or mags[0] <= 0:
        raise ValidationError("magnitudes must be positive and strictly increasing")
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    frac = breakdown_fraction(n, q)
    report = {"schema": REPORT_SCHEMA, "n": n, "q": q, "magnitudes": mags,
              "breakdown_fraction": f"{frac.numerator}/{frac.denominator}",
              "breakdown_fraction_value": float(frac), "covariates": covariates,
              "trials": []}
    bounded_ok, diverging_ok = True, True
    for t in range(trials):
        s = seed + t
        entry = {"seed": s}
        m0 = n - q
        untouched = np.setdiff1d(np.arange(n), replacement_set(n, m0, s))
        # T_I0: best Chebyshev value over q-subsets of the untouched rows
        t_i0 = enumerate_lqs(data.subset(untouched), q, subset_limit).objective
        objs = [certified_objective(perturb(data, m0, v, s, covariates), q, subset_limit,
                                    mio_limits) for v in mags]
        ref = objs[0]
        drift = max(abs(o - ref) for o in objs) / max(abs(ref), 1e-300)
        within = all(o <= t_i0 * (1 + 1e-9) + 1e-12 for o in objs)
        ok = within and drift <= DRIFT_TOL
        bounded_ok &= ok
        entry["bounded"] = {"m": m0, "objectives": objs, "t_i0": t_i0,
                            "relative_drift": drift, "within_t_i0": within, "verdict": ok}
        m1 = n - q + 1
        if m1 <= n:
            objs = [certified_objective(perturb(data, m1, v, s, covariates), q, subset_limit,
                                        mio_limits) for v in mags]
            ratio = objs[-1] / objs[0] if objs[0] > 0 else math.inf
            growth = mags[-1] / mags[0]
            ok = ratio >= 1e-3 * growth
            diverging_ok &= ok
            entry["diverging"] = {"m": m1, "objectives": objs,
                                  "per_magnitude": [o / v for o, v in zip(objs, mags)],
                                  "final_over_initial": ratio, "verdict": ok}
        report["trials"].append(entry)
    report["verdict"] = {"bounded": bounded_ok, "diverging": diverging_ok}
    return report
