import numpy as np
import pytest
from scipy.optimize import linprog

from blocklyap import LpProblem, LpStatus, solve_lp
from blocklyap.lp import dual_objective

import oracles


def test_max_x_bounded_by_one():
    sol = solve_lp(LpProblem([-1.0], A_ub=[[1.0]], b_ub=[1.0]))
    assert sol.optimal
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.objective == pytest.approx(-1.0)


def test_covering_constraint():
    sol = solve_lp(LpProblem([1.0, 1.0], A_ub=[[-1.0, -1.0]], b_ub=[-1.0]))
    assert sol.objective == pytest.approx(1.0)


def test_infeasible():
    sol = solve_lp(LpProblem([0.0], A_ub=[[1.0]], b_ub=[-1.0]))
    assert sol.status is LpStatus.INFEASIBLE


def test_unbounded():
    sol = solve_lp(LpProblem([-1.0, 0.0], A_ub=[[1.0, -1.0]], b_ub=[1.0]))
    assert sol.status is LpStatus.UNBOUNDED


def test_free_variables_and_equalities():
    # min |shift| style: x free, x = -3
    sol = solve_lp(LpProblem([1.0], A_eq=[[1.0]], b_eq=[-3.0], bounds=(None, None)))
    assert sol.x[0] == pytest.approx(-3.0)


def test_redundant_equalities():
    p = LpProblem([1.0, 2.0], A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0])
    sol = solve_lp(p)
    assert sol.objective == pytest.approx(1.0)


def test_degenerate_cycling_example():
    # Beale's classic cycling LP; optimum -0.05
    c = [-0.75, 150.0, -0.02, 6.0]
    A = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]]
    sol = solve_lp(LpProblem(c, A_ub=A, b_ub=[0.0, 0.0, 1.0]))
    assert sol.objective == pytest.approx(-0.05)


def test_rejects_nonfinite_data():
    with pytest.raises(ValueError):
        LpProblem([np.inf])


@pytest.mark.parametrize("seed", range(30))
def test_matches_vertex_enumeration_and_duality(seed):
    rng = np.random.default_rng(seed)
    n = 3
    c = rng.normal(size=n)
    A_ub = rng.normal(size=(3, n))
    b_ub = rng.uniform(0.5, 2.0, 3)
    lo, hi = -np.ones(n), 2 * np.ones(n)
    p = LpProblem(c, A_ub=A_ub, b_ub=b_ub, bounds=list(zip(lo, hi)))
    sol = solve_lp(p)
    G, h = oracles.box_rows(lo, hi)
    ref, _ = oracles.vertex_enumeration(c, G=np.vstack([A_ub, G]), h=np.concatenate([b_ub, h]))
    assert sol.objective == pytest.approx(ref, rel=1e-9, abs=1e-9)
    assert dual_objective(p, sol) == pytest.approx(ref, rel=1e-8, abs=1e-8)
    assert np.all(sol.ub_duals <= 1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_matches_scipy_on_larger_problems(seed):
    rng = np.random.default_rng(100 + seed)
    n, m = 30, 20
    A_ub = rng.normal(size=(m, n))
    b_ub = rng.uniform(1, 2, m)
    A_eq = rng.normal(size=(5, n))
    b_eq = A_eq @ rng.uniform(0, 0.1, n)
    c = rng.normal(size=n)
    bounds = [(0, 3)] * n
    ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    sol = solve_lp(LpProblem(c, A_eq, b_eq, A_ub, b_ub, bounds))
    assert sol.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-9)
