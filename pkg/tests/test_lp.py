import itertools

import numpy as np
import pytest

from lqsopt.lp import (LinearProgram, LpStatus, LpValidationError, constraint_violation,
                       dual_objective, dual_sign_violation, dump_lp, solve_lp)


def vertex_enumeration(c, A, b):
    """min c'x over {A x <= b} by trying every basic solution (bounded polytopes only)."""
    m, n = A.shape
    best = np.inf
    for rows in itertools.combinations(range(m), n):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            best = min(best, c @ x)
    return best


def random_polytope_lp(rng, n):
    m = int(rng.integers(1, 5))
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(-1, 1, size=n)
    b = A @ x0 + rng.uniform(0.1, 1.0, size=m)
    c = rng.normal(size=n)
    return c, A, b


def test_tiny_textbook_lp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6 -> (1.6, 1.2), value 2.8
    lp = LinearProgram([-1, -1], [[1, 2], [3, 1]], ["<=", "<="], [4, 6])
    sol = solve_lp(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert np.allclose(sol.primal, [1.6, 1.2])
    assert sol.objective_value == pytest.approx(-2.8)


def test_infeasible_and_unbounded():
    assert solve_lp(LinearProgram([1], [[1], [1]], ["<=", ">="], [1, 2])).status is LpStatus.INFEASIBLE
    assert solve_lp(LinearProgram([-1, 0], [[1, -1]], ["<="], [1])).status is LpStatus.UNBOUNDED


def test_validation_errors():
    with pytest.raises(LpValidationError):
        LinearProgram([1, 2], [[1]], ["<="], [1])
    with pytest.raises(LpValidationError):
        LinearProgram([1], [[1]], ["<>"], [1])
    with pytest.raises(LpValidationError):
        LinearProgram([1], [[1]], ["<="], [1], lower=[2], upper=[1])


@pytest.mark.parametrize("seed", range(40))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    c, A, b = random_polytope_lp(rng, n)
    box = np.vstack([np.eye(n), -np.eye(n)])
    A_all = np.vstack([A, box])
    b_all = np.concatenate([b, np.full(2 * n, 3.0)])
    lp = LinearProgram(c, A_all, ["<="] * len(b_all), b_all, lower=np.full(n, -np.inf))
    sol = solve_lp(lp)
    assert sol.optimal
    assert sol.objective_value == pytest.approx(vertex_enumeration(c, A_all, b_all), abs=1e-8)


def test_bounds_and_equalities_duality(rng):
    for _ in range(50):
        n, m = 5, 3
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(0, 1, size=n)
        b = A @ x0
        lo = np.zeros(n)
        up = np.full(n, 2.0)
        c = rng.normal(size=n)
        lp = LinearProgram(c, A, ["="] * m, b, lo, up)
        sol = solve_lp(lp)
        assert sol.optimal
        assert constraint_violation(lp, sol.primal) <= 1e-8
        assert abs(dual_objective(lp, sol.dual) - sol.objective_value) <= 1e-7 * (1 + abs(sol.objective_value))
        assert dual_sign_violation(lp, sol.dual) <= 1e-9


def test_warm_start_basis_reused(rng):
    c, A, b = random_polytope_lp(rng, 3)
    A = np.vstack([A, np.eye(3), -np.eye(3)])
    b = np.concatenate([b, np.full(6, 2.0)])
    lp = LinearProgram(c, A, ["<="] * len(b), b, lower=np.full(3, -np.inf))
    first = solve_lp(lp)
    again = solve_lp(lp, basis=first.basis)
    assert again.iterations == 0
    assert again.objective_value == pytest.approx(first.objective_value)


def test_degenerate_lp_terminates():
    # many redundant constraints through the optimal vertex
    A = np.array([[1, 1], [1, 1], [2, 2], [1, 0], [0, 1], [1, 2]], dtype=float)
    b = np.array([1, 1, 2, 1, 1, 1.5])
    lp = LinearProgram([-1, -1], A, ["<="] * 6, b)
    sol = solve_lp(lp)
    assert sol.optimal and sol.objective_value == pytest.approx(-1.0)


def test_iteration_limit_status():
    rng = np.random.default_rng(3)
    c, A, b = random_polytope_lp(rng, 4)
    A = np.vstack([A, np.eye(4), -np.eye(4)])
    b = np.concatenate([b, np.full(8, 2.0)])
    lp = LinearProgram(c, A, ["<="] * len(b), b, lower=np.full(4, -np.inf))
    assert solve_lp(lp, iteration_limit=1).status in (LpStatus.ITERATION_LIMIT, LpStatus.OPTIMAL)


def test_dump_lp_lists_rows():
    lp = LinearProgram([1, 2], [[1, 1]], [">="], [1])
    text = dump_lp(lp)
    assert ">=" in text and len(text.splitlines()) >= 2
