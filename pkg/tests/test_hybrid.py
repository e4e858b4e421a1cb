import math

import numpy as np
import pytest

from lqsopt.errors import ValidationError
from lqsopt.fits import chebyshev_fit, lad_fit, lqs_objective
from lqsopt.hybrid import (InitKind, InitStrategy, cheb_subsample_init, hybrid,
                           hybrid_large_scale, initial_points, lad_perturbed_init, multistart)

from conftest import random_dataset


def test_lad_perturbed_starts_inside_box(rng):
    d = random_dataset(rng, 30, 3, outliers=5)
    strat = InitStrategy(runs=20, eta=0.5, seed=4)
    pts = lad_perturbed_init(d, strat)
    b = lad_fit(d).beta
    assert len(pts) == 20 and np.allclose(pts[0], b)
    for x in pts:
        assert np.all(np.abs(x - b) <= 0.5 * np.abs(b) + 1e-12)


def test_cheb_enumerates_when_budget_covers_all_subsets(rng):
    d = random_dataset(rng, 6, 1, outliers=2)
    q = 4
    strat = InitStrategy(kind=InitKind.CHEB_SUBSAMPLE, runs=1, subsamples_per_run=math.comb(6, 2))
    beta = cheb_subsample_init(d, q, strat)
    best = min(lqs_objective(d, chebyshev_fit(d, J).beta, q)
               for J in [(i, j) for i in range(6) for j in range(i + 1, 6)])
    assert lqs_objective(d, beta, q) == pytest.approx(best)


def test_hybrid_no_worse_than_descent_per_start(rng):
    d = random_dataset(rng, 40, 3, outliers=14)
    strat = InitStrategy(runs=6, seed=1)
    starts = initial_points(d, 24, strat)
    sub = multistart(d, 24, starts, "subgrad")
    hyb = multistart(d, 24, starts, "hybrid")
    for f_sub, f_hyb in zip(sub.info["start_objectives"], hyb.info["start_objectives"]):
        assert f_hyb <= f_sub + 1e-12
    assert hyb.objective <= sub.objective + 1e-12
    assert hyb.info["seqlo_calls"] == 6


def test_large_scale_variant_calls_seqlo_once(rng):
    d = random_dataset(rng, 40, 2, outliers=10)
    res = hybrid_large_scale(d, 25, InitStrategy(runs=5))
    assert res.info["seqlo_calls"] == 1
    assert res.objective <= res.info["first_stage_objective"] + 1e-12


def test_threads_do_not_change_result(rng):
    d = random_dataset(rng, 30, 2, outliers=8)
    a = hybrid(d, 18, InitStrategy(runs=6), workers=1)
    b = hybrid(d, 18, InitStrategy(runs=6), workers=3)
    assert np.array_equal(a.beta, b.beta)


def test_explicit_points_and_validation(rng):
    d = random_dataset(rng, 10, 2)
    with pytest.raises(ValidationError):
        InitStrategy(kind="explicit")
    with pytest.raises(ValidationError):
        initial_points(d, 5, InitStrategy(kind="explicit", points=([1.0],)))
    pts = initial_points(d, 5, InitStrategy(kind="explicit", points=([1.0, 2.0],)))
    assert np.allclose(pts[0], [1, 2])
    with pytest.raises(ValidationError):
        multistart(d, 5, pts, "bogus")
