import io

import highspy
import numpy as np
import pytest
import scipy.sparse as sp

from rampfs.formulations import SvmInstance, build_svm_l1
from rampfs.lp import (
    INF,
    LinearProgram,
    LpBuilder,
    LpStatus,
    NumericalFailure,
    Tolerances,
    resolve_with_fixed,
    solve_lp,
    write_lp_file,
)

METHODS = ["highs", "simplex"]


def lp_from_dense(c, A, sense, rhs, lb, ub, maximize=False):
    return LinearProgram(np.asarray(c, float), sp.csr_matrix(np.asarray(A, float)), np.asarray(sense),
                         np.asarray(rhs, float), np.asarray(lb, float), np.asarray(ub, float), maximize)


def random_lp(rng):
    m, n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    A = rng.integers(-3, 4, (m, n)).astype(float)
    sense = rng.choice(["<", ">", "="], m, p=[0.45, 0.45, 0.1])
    rhs = rng.integers(-5, 6, m).astype(float)
    lb = rng.integers(-3, 1, n).astype(float)
    ub = lb + rng.integers(0, 5, n)
    lb[rng.random(n) < 0.2] = -INF
    ub[rng.random(n) < 0.4] = INF
    c = rng.integers(-4, 5, n).astype(float)
    return lp_from_dense(c, A, sense, rhs, lb, ub, bool(rng.random() < 0.3))


@pytest.mark.parametrize("method", METHODS)
def test_single_variable_bound_binding(method):
    lp = lp_from_dense([1.0], [[1.0]], [">"], [1.0], [0.0], [10.0])
    sol = solve_lp(lp, method)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(1.0)
    assert sol.x[0] == pytest.approx(1.0)


@pytest.mark.parametrize("method", METHODS)
def test_degenerate_symmetric_optimum(method):
    lp = lp_from_dense([1, 1], [[1, 1]], [">"], [2], [0, 0], [INF, INF])
    sol = solve_lp(lp, method)
    assert sol.objective == pytest.approx(2.0)
    assert sol.x.sum() == pytest.approx(2.0)


@pytest.mark.parametrize("method", METHODS)
def test_svm_l1_two_points(method):
    # hand-solved: w = 1, b = 0 puts both points exactly on their margins
    inst = SvmInstance(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]))
    lp = build_svm_l1(inst, 1.0)
    sol = solve_lp(lp, method)
    assert sol.objective == pytest.approx(1.0)
    lay = lp.layout
    w = sol.x[lay.w]
    assert w[0] == pytest.approx(1.0)
    assert sol.x[lay.b] == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(sol.x[lay.xi], 0.0, atol=1e-9)


@pytest.mark.parametrize("method", METHODS)
def test_infeasible_and_unbounded(method):
    infeas = lp_from_dense([1], [[1], [1]], [">", "<"], [2, 1], [0], [INF])
    assert solve_lp(infeas, method).status is LpStatus.INFEASIBLE
    unb = lp_from_dense([-1], [[1]], [">"], [0], [0], [INF])
    assert solve_lp(unb, method).status is LpStatus.UNBOUNDED


@pytest.mark.parametrize("method", METHODS)
def test_fix_variable_reports_reduced_cost(method):
    lp = lp_from_dense([1, 1], np.zeros((0, 2)), [], [], [0, 0], [INF, INF])
    sol = resolve_with_fixed(lp, {0: 1.0}, method)
    assert sol.objective == pytest.approx(1.0)
    assert sol.reduced_costs[1] == pytest.approx(1.0)


def test_fix_outside_bounds_rejected():
    lp = lp_from_dense([1], np.zeros((0, 1)), [], [], [0], [1])
    with pytest.raises(ValueError):
        resolve_with_fixed(lp, {0: 2.0})


def test_fixing_equals_bound_change():
    rng = np.random.default_rng(5)
    for _ in range(30):
        lp = random_lp(rng)
        a = solve_lp(lp)
        if not a.optimal:
            continue
        j = int(rng.integers(lp.num_vars))
        fixes = {j: float(a.x[j])}
        lb, ub = lp.lb.copy(), lp.ub.copy()
        lb[j] = ub[j] = a.x[j]
        b = resolve_with_fixed(lp, fixes)
        c = solve_lp(lp.with_bounds(lb, ub))
        assert b.objective == pytest.approx(c.objective, abs=1e-7)
        assert b.objective == pytest.approx(a.objective, abs=1e-7)


def test_highs_and_simplex_agree_on_random_lps():
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(300):
        lp = random_lp(rng)
        a, b = solve_lp(lp, "highs"), solve_lp(lp, "simplex")
        seen.add(a.status)
        assert a.status == b.status
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, abs=1e-6)
            assert lp.max_violation(b.x) <= 1e-7
    assert seen == {LpStatus.OPTIMAL, LpStatus.INFEASIBLE, LpStatus.UNBOUNDED}


def _check_optimality(lp, sol, tol=1e-6):
    """Bounds, rows, reduced costs ``c - A^T y`` and complementary slackness (minimization form)."""
    sgn = -1.0 if lp.maximize else 1.0
    c = sgn * lp.c
    y = sgn * sol.duals
    rc = sgn * sol.reduced_costs
    assert lp.max_violation(sol.x) <= 1e-7
    assert np.allclose(rc, c - lp.A.T @ y, atol=tol)
    act = lp.A @ sol.x
    for i, s in enumerate(lp.sense):
        slack = act[i] - lp.rhs[i]
        if s == "<":
            assert y[i] <= tol and abs(y[i] * slack) <= tol
        elif s == ">":
            assert y[i] >= -tol and abs(y[i] * slack) <= tol
    for j in range(lp.num_vars):
        at_lb = abs(sol.x[j] - lp.lb[j]) <= 1e-7
        at_ub = abs(sol.x[j] - lp.ub[j]) <= 1e-7
        if not at_lb:
            assert rc[j] <= tol
        if not at_ub:
            assert rc[j] >= -tol
    # strong duality
    dual_obj = y @ lp.rhs
    dual_obj += sum(rc[j] * (lp.lb[j] if rc[j] > 0 else lp.ub[j]) for j in range(lp.num_vars)
                    if abs(rc[j]) > tol)
    assert sgn * (sol.objective - lp.offset) == pytest.approx(dual_obj, abs=1e-6)


@pytest.mark.parametrize("method", METHODS)
def test_complementary_slackness(method):
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(150):
        lp = random_lp(rng)
        sol = solve_lp(lp, method)
        if sol.optimal:
            _check_optimality(lp, sol)
            checked += 1
    assert checked > 30


@pytest.mark.parametrize("method", METHODS)
def test_deterministic(method):
    lp = random_lp(np.random.default_rng(3))
    a, b = solve_lp(lp, method), solve_lp(lp, method)
    assert a.status == b.status
    assert np.array_equal(a.x, b.x)


def test_offset_in_objective():
    b = LpBuilder()
    x = b.add_vars(1, 0.0, 5.0, 2.0)
    b.add_row(x, [1.0], ">", 1.0)
    lp = b.build(offset=3.0)
    assert solve_lp(lp).objective == pytest.approx(5.0)


def test_validate_rejects_bad_bounds():
    lp = lp_from_dense([1], [[1]], ["<"], [1], [2], [1])
    with pytest.raises(ValueError):
        solve_lp(lp)


def test_simplex_iteration_cap():
    from rampfs.simplex import solve_simplex

    # maximize sum x subject to x_i <= i + 1: one pivot per row from the zero start
    lp = lp_from_dense(np.ones(5), np.eye(5), ["<"] * 5, np.arange(1, 6), np.zeros(5),
                       np.full(5, INF), maximize=True)
    assert solve_simplex(lp).objective == pytest.approx(15.0)
    with pytest.raises(NumericalFailure):
        solve_simplex(lp, Tolerances(), max_iter=1)


def test_lp_file_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    done = 0
    while done < 10:
        lp = random_lp(rng)
        sol = solve_lp(lp)
        if not sol.optimal:
            continue
        path = tmp_path / f"m{done}.lp"
        write_lp_file(lp, path)
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        assert h.readModel(str(path)) == highspy.HighsStatus.kOk
        h.run()
        assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
        assert h.getInfo().objective_function_value == pytest.approx(sol.objective, abs=1e-7)
        done += 1


def test_lp_file_sections():
    lp = lp_from_dense([1, -2], [[1, 1]], ["<"], [1], [0, -INF], [1, INF])
    buf = io.StringIO()
    write_lp_file(lp, buf, binaries=[0])
    text = buf.getvalue()
    for section in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
        assert section in text
    assert "free" in text
