import io
import math

import numpy as np
import pytest

from lqsopt.errors import ValidationError
from lqsopt.fits import Dataset, Polyhedron, chebyshev_fit, lqs_objective
from lqsopt.lp import solve_lp
from lqsopt.mio import (TRACE_HEADER, BnbNode, Box, MioLimits, MioStatus, build_model,
                        dump_model, node_relaxation, reconstruct_solution, relaxation_lp, solve,
                        solve_with_evolution, sos1_violation, write_trace)
from lqsopt.oracle import enumerate_lqs

from conftest import random_dataset, small_instance


def test_structure_n3():
    d = Dataset([1.0, 2.0, 3.0], [[1.0], [1.0], [1.0]])
    m = build_model(d, 2)
    L = m.variable_layout()
    assert L["z"].stop - L["z"].start == 3
    assert len(m.sos1_sets) == 9
    lp = relaxation_lp(m, BnbNode())
    z_rows = [i for i, row in enumerate(lp.constraint_matrix) if np.all(row[L["z"]] == 1) and not row[:L["z"].start].any()]
    assert len(z_rows) == 1 and lp.rhs[z_rows[0]] == 2


def test_dimension_checks(rng):
    d = random_dataset(rng, 6, 2)
    with pytest.raises(ValidationError):
        build_model(d, 3, polyhedral=Polyhedron(np.ones((1, 3)), [1.0]))
    with pytest.raises(ValidationError):
        build_model(d, 3, box=Box(np.zeros(3), 1.0))
    with pytest.raises(ValidationError):
        solve(build_model(d, 3), warm_start=np.zeros(5))
    with pytest.raises(ValidationError):
        BnbNode(frozenset({1}), frozenset({1}))


def test_big_m_values_by_hand():
    d = Dataset([1.0, -2.0], [[1.0, 2.0], [-3.0, 0.5]])
    m = build_model(d, 1, box=Box([0.5, -1.0], 2.0))
    # |1 - (0.5 - 2)| + 2 * 3 = 8.5 ; |-2 - (-1.5 - 0.5)| + 2 * 3.5 = 7
    assert np.allclose(m.residual_bound, [8.5, 7.0])
    assert np.allclose(m.m_lower, [8.5, 7.0]) and m.m_upper_default == 8.5


def test_zero_box_pins_beta(rng):
    d = random_dataset(rng, 8, 2)
    b0 = np.array([0.3, -0.2])
    res = solve(build_model(d, 5, box=Box(b0, 0.0)))
    assert res.status == MioStatus.PROVED_OPTIMAL
    assert res.upper_bound == pytest.approx(lqs_objective(d, b0, 5), abs=1e-7)


def test_root_bounds(rng):
    d = random_dataset(rng, 10, 2, outliers=3)
    opt = enumerate_lqs(d, 6).objective
    assert node_relaxation(build_model(d, 6), BnbNode()) == pytest.approx(0.0, abs=1e-12)
    boxed = build_model(d, 6, box=Box(np.ones(2), 5.0))
    assert 0.0 <= node_relaxation(boxed, BnbNode()) <= opt + 1e-9


def test_intercept_only_example():
    y = np.array([0, 1, 2, 3, 4, 100, 200, 300], dtype=float)
    d = Dataset(y, np.ones((8, 1)))
    res = solve(build_model(d, 5))
    assert res.status == MioStatus.PROVED_OPTIMAL
    assert res.upper_bound == pytest.approx(enumerate_lqs(d, 5).objective) == pytest.approx(2.0)
    assert res.incumbent_subset == (0, 1, 2, 3, 4)


def test_leaf_value_is_chebyshev(rng):
    d = random_dataset(rng, 9, 2, outliers=2)
    S = frozenset({0, 2, 3, 5, 7})
    assert node_relaxation(build_model(d, 5), BnbNode(S)) == chebyshev_fit(d, sorted(S)).objective


def test_leaf_relaxation_lp_equals_chebyshev(rng):
    # with z fixed everywhere, the relaxation itself reduces to the subset fit
    for _ in range(10):
        d = random_dataset(rng, 9, 2, outliers=2)
        S = frozenset(int(i) for i in rng.choice(9, 5, replace=False))
        Z = frozenset(range(9)) - S
        sol = solve_lp(relaxation_lp(build_model(d, 5), BnbNode(S, Z)))
        assert sol.objective_value == pytest.approx(chebyshev_fit(d, sorted(S)).objective, abs=1e-7)


def test_warm_start_optimum_and_trace_invariants():
    d, q = small_instance(11)
    opt = enumerate_lqs(d, q)
    res = solve(build_model(d, q), warm_start=opt.beta)
    assert res.trace[0].upper_bound == pytest.approx(opt.objective)
    ubs = [e.upper_bound for e in res.trace]
    lbs = [e.lower_bound for e in res.trace]
    assert all(b <= a for a, b in zip(ubs, ubs[1:]))
    assert all(b >= a for a, b in zip(lbs, lbs[1:]))
    assert all(lb <= opt.objective + 1e-9 and ub >= opt.objective - 1e-9 for lb, ub in zip(lbs, ubs))
    assert (res.trace[-1].upper_bound, res.trace[-1].lower_bound) == (res.upper_bound, res.lower_bound)
    assert res.status == MioStatus.PROVED_OPTIMAL and res.gap <= 1e-6


def test_infinite_gap_tol_returns_immediately(rng):
    d = random_dataset(rng, 12, 2, outliers=3)
    w = np.array([1.0, 1.0])
    res = solve(build_model(d, 7), warm_start=w, limits=MioLimits(gap_tol=math.inf))
    assert res.nodes_explored <= 1
    assert res.upper_bound <= lqs_objective(d, w, 7)
    assert res.lower_bound == pytest.approx(res.info["root_bound"])


def test_node_limit_reports_valid_bounds(rng):
    d = random_dataset(rng, 14, 3, outliers=4)
    res = solve(build_model(d, 8), limits=MioLimits(node_limit=3))
    assert res.status == MioStatus.NODE_LIMIT
    assert res.lower_bound <= res.upper_bound + 1e-9
    assert res.gap > 1e-6


def test_polyhedral_constraints_match_oracle(rng):
    d = random_dataset(rng, 9, 2, outliers=2)
    poly = Polyhedron([[1.0, 1.0]], [1.0])
    res = solve(build_model(d, 6, polyhedral=poly))
    assert poly.contains(res.incumbent_beta)
    assert res.upper_bound == pytest.approx(enumerate_lqs(d, 6, constraints=poly).objective, rel=1e-6)


def test_sos1_reconstruction(rng):
    d = random_dataset(rng, 10, 2, outliers=3)
    m = build_model(d, 6)
    res = solve(m)
    sol = reconstruct_solution(m, res.incumbent_beta)
    assert sos1_violation(m, sol) <= 1e-8
    a = sol["r_plus"] + sol["r_minus"]
    assert np.allclose(a - sol["gamma"], sol["mu"] - sol["mu_bar"])
    assert sol["z"].sum() == 6 and sol["gamma"] == pytest.approx(res.upper_bound)


def test_evolution_trace_file(tmp_path, rng):
    d = random_dataset(rng, 10, 2, outliers=3)
    path = tmp_path / "trace.csv"
    res, text = solve_with_evolution(build_model(d, 6), limits=MioLimits(), trace_path=path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert raw.decode() == text
    last = [float(v) for v in lines[-1].split(",")]
    assert last[1:] == [res.upper_bound, res.lower_bound]
    buf = io.StringIO()
    write_trace(res.trace, buf)
    assert buf.getvalue().splitlines()[0] == lines[0]


def test_dump_model_lists_rows(rng):
    d = random_dataset(rng, 4, 1)
    assert "sos1=12" in dump_model(build_model(d, 2))
