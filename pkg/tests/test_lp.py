import itertools
import math

import numpy as np
import pytest

from kextbounds.bounds import ChannelKind, ChannelParams, erasure_lp_build
from kextbounds.lp import (LinearProgram, LpNumericalError, LpSolution, LpStatus,
                           check_solution, min_type2_error, solve_lp)


def vertex_max(lp):
    """Best objective over all basic feasible points, or None if infeasible.

    Every constraint and finite bound is turned into a hyperplane; each
    choice of num_vars of them that pins down a point is a vertex candidate.
    """
    n = lp.num_vars
    planes = []
    for row, rel, rhs in lp.constraints:
        planes.append((row, rhs))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if math.isfinite(lp.lower[j]):
            planes.append((e, lp.lower[j]))
        if math.isfinite(lp.upper[j]):
            planes.append((e, lp.upper[j]))
    best = None
    for combo in itertools.combinations(range(len(planes)), n):
        A = np.array([planes[i][0] for i in combo])
        b = np.array([planes[i][1] for i in combo])
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        x = np.linalg.solve(A, b)
        sol = LpSolution(LpStatus.OPTIMAL, float(lp.objective @ x), x)
        rep = check_solution(lp, sol)
        if max(rep.constraint_violation, rep.bound_violation) <= 1e-9:
            v = float(lp.objective @ x)
            best = v if best is None else max(best, v)
    return best


def random_lp(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 5))
    cons = []
    for _ in range(m):
        rel = str(rng.choice(["<=", ">=", "="], p=[0.5, 0.3, 0.2]))
        cons.append((rng.integers(-5, 6, n).astype(float), rel, float(rng.integers(-6, 10))))
    lower = rng.integers(-3, 1, n).astype(float)
    upper = lower + rng.integers(1, 8, n)
    return LinearProgram(n, rng.integers(-5, 6, n).astype(float), cons, lower, upper)


def test_trivial():
    sol = solve_lp(LinearProgram(1, [1.0], [([1.0], "<=", 1.0)]))
    assert sol.status is LpStatus.OPTIMAL and sol.objective_value == pytest.approx(1.0)
    rep = check_solution(LinearProgram(1, [1.0], [([1.0], "<=", 1.0)]), sol)
    assert rep.passed and rep.constraint_violation == 0 and rep.bound_violation == 0


def test_infeasible_and_unbounded():
    lp = LinearProgram(1, [1.0], [([1.0], "<=", 1.0), ([1.0], ">=", 2.0)])
    assert solve_lp(lp).status is LpStatus.INFEASIBLE
    lp = LinearProgram(2, [1.0, 1.0], [([1.0, -1.0], "<=", 1.0)])
    assert solve_lp(lp).status is LpStatus.UNBOUNDED


def test_perturbed_primal_reports_bound_violation():
    lp = LinearProgram(1, [1.0], [], upper=[1.0])
    sol = solve_lp(lp)
    sol.primal = np.array([1.01])
    rep = check_solution(lp, sol)
    assert rep.bound_violation == pytest.approx(0.01)
    assert rep.objective_delta == pytest.approx(0.01)
    assert not rep.passed


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        LinearProgram(2, [1.0], [])
    with pytest.raises(ValueError):
        LinearProgram(2, [1.0, 1.0], [([1.0], "<=", 1.0)])
    with pytest.raises(ValueError):
        LinearProgram(1, [1.0], [([1.0], "<", 1.0)])
    with pytest.raises(ValueError):
        LinearProgram(1, [1.0], [([1.0], "<=", math.inf)])


def test_free_and_negative_variables():
    # max -|x - 3| style: x free, y >= x - 3, y >= 3 - x, minimise y
    lp = LinearProgram(2, [0.0, -1.0],
                       [([-1.0, 1.0], ">=", -3.0), ([1.0, 1.0], ">=", 3.0)],
                       lower=[-math.inf, -math.inf])
    sol = solve_lp(lp)
    assert sol.objective_value == pytest.approx(0.0, abs=1e-12)
    assert sol.primal[0] == pytest.approx(3.0)
    lp = LinearProgram(1, [1.0], [], lower=[-math.inf], upper=[-2.0])
    assert solve_lp(lp).objective_value == pytest.approx(-2.0)
    lp = LinearProgram(1, [-1.0], [], lower=[-math.inf], upper=[-2.0])
    assert solve_lp(lp).status is LpStatus.UNBOUNDED


def test_matches_vertex_enumeration():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(300):
        lp = random_lp(rng)
        ref = vertex_max(lp)
        sol = solve_lp(lp)
        if ref is None:
            assert sol.status is LpStatus.INFEASIBLE
            continue
        assert sol.status is LpStatus.OPTIMAL
        assert sol.objective_value == pytest.approx(ref, abs=1e-9)
        assert check_solution(lp, sol).passed
        checked += 1
    assert checked > 100


def test_degenerate_program_terminates():
    # a classic cycling example for the textbook rule
    c = [10.0, -57.0, -9.0, -24.0]
    cons = [([0.5, -5.5, -2.5, 9.0], "<=", 0.0),
            ([0.5, -1.5, -0.5, 1.0], "<=", 0.0),
            ([1.0, 0.0, 0.0, 0.0], "<=", 1.0)]
    sol = solve_lp(LinearProgram(4, c, cons))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(1.0)


def test_redundant_equalities():
    lp = LinearProgram(2, [1.0, 2.0], [([1.0, 1.0], "=", 1.0), ([2.0, 2.0], "=", 2.0)])
    sol = solve_lp(lp)
    assert sol.objective_value == pytest.approx(2.0)


def test_deterministic():
    rng = np.random.default_rng(1)
    for _ in range(20):
        lp = random_lp(rng)
        a, b = solve_lp(lp), solve_lp(lp)
        assert a.status == b.status
        if a.status is LpStatus.OPTIMAL:
            assert a.objective_value == b.objective_value
            assert np.array_equal(a.primal, b.primal)


def test_duals_are_sensitivities():
    lp = LinearProgram(2, [3.0, 2.0], [([1.0, 1.0], "<=", 4.0), ([-1.0, 0.0], ">=", -3.0)])
    sol = solve_lp(lp)
    assert np.allclose(sol.dual, [2.0, -1.0])


@pytest.mark.parametrize("n,k", [(1, 2), (2, 2), (5, 3), (12, 10)])
def test_erasure_program_certified(n, k):
    lp = erasure_lp_build(ChannelParams(ChannelKind.ERASURE, 0.35, n, 0.05, k))
    sol = solve_lp(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.max_primal_residual <= 1e-8 and sol.duality_gap_estimate <= 1e-7
    assert check_solution(lp, sol).passed


def test_erasure_program_hand_value():
    lp = erasure_lp_build(ChannelParams(ChannelKind.ERASURE, 0.0, 1, 0.0, 2))
    assert solve_lp(lp).objective_value == pytest.approx(0.5, abs=1e-12)


def test_type2_program():
    assert min_type2_error([0.8, 0.2], [0.5, 0.5], 0.1) == pytest.approx(0.75, abs=1e-12)


def test_uncertifiable_solution_raises():
    # coefficients spanning ~60 orders of magnitude defeat double precision
    lp = erasure_lp_build(ChannelParams(ChannelKind.ERASURE, 0.35, 60, 0.05, 10))
    try:
        sol = solve_lp(lp)
    except (LpNumericalError, RuntimeError):
        return
    assert sol.max_primal_residual <= 1e-8
