import json

import numpy as np
import pytest

from rampfs.bigm import (
    StopRule,
    default_variant,
    init_bounds,
    initial_solution,
    run_algorithm1,
    svm_l1,
    tighten_b,
    tighten_M,
    tighten_w,
)
from rampfs.formulations import HyperParams, SvmInstance, build_rlfs, rlfs_violation
from rampfs.milp import MilpStatus, solve_milp

from .instances import SMALL_SEEDS, oracle_value, rel_close, small


def exact_value(inst, hp, bounds):
    res = solve_milp(build_rlfs(inst, hp, bounds))
    assert res.status is MilpStatus.OPTIMAL
    return res.objective


def test_separable_needs_no_repair():
    X = np.array([[0.0, 0.2], [0.1, 0.9], [0.9, 0.1], [1.0, 0.8]])
    y = np.array([-1, -1, 1, 1.0])
    inst, hp = SvmInstance(X, y), HyperParams(10.0, 2)
    sol, UB, support = initial_solution(inst, hp)
    assert np.all(sol.z == 0) and np.allclose(sol.xi, 0.0, atol=1e-9)
    assert set(np.flatnonzero(sol.v).tolist()) <= set(support.tolist())


def test_repair_zeroes_smallest_weights():
    r = np.random.default_rng(1)
    y = np.array([1, -1] * 10, float)
    X = r.random((20, 5)) + 0.25 * y[:, None] * np.array([1.0, 0.8, 0.6, 0.4, 0.2])
    inst, hp = SvmInstance(X, y), HyperParams(10.0, 2)
    first = svm_l1(inst, hp.C)
    assert np.count_nonzero(first.w) == 5
    sol, UB, support = initial_solution(inst, hp)
    top = set(np.argsort(-np.abs(first.w))[:2].tolist())
    assert set(np.flatnonzero(sol.v).tolist()) <= top
    assert np.count_nonzero(sol.w[[k for k in range(5) if k not in top]]) == 0
    assert UB == pytest.approx(sol.objective)


def test_initial_UB_above_optimum():
    for seed in range(20):
        inst, hp = small(seed)
        sol, UB, _ = initial_solution(inst, hp)
        assert UB >= oracle_value(seed) - 1e-9
        assert sol.v.sum() <= hp.B
        assert np.all(sol.xi <= 2 * (1 - sol.z) + 1e-12)


def test_init_bounds_identical_points_give_zero_M():
    X = np.array([[0.5, 0.5], [0.5, 0.5], [0.1, 0.9], [0.2, 0.3]])
    y = np.array([1, 1, -1, -1.0])
    b = init_bounds(SvmInstance(X, y), 2.0)
    assert b.M[0] == 0.0 and b.M[1] == 0.0
    assert b.M[2] > 0


def test_init_bounds_product():
    X = np.array([[0.0, 0.0], [2.0, 1.0], [5.0, 5.0], [5.0, 3.0]])
    y = np.array([1, 1, -1, -1.0])
    b = init_bounds(SvmInstance(X, y), 3.0)
    assert np.allclose(b.M, 6.0)
    assert np.allclose(b.u, 3.0) and np.allclose(b.l, 3.0)
    assert b.UB_w is None and b.LB_b == -np.inf and b.UB_b == np.inf


def test_initial_bounds_are_safe():
    for seed in SMALL_SEEDS:
        inst, hp = small(seed)
        sol, UB, _ = initial_solution(inst, hp)
        bounds = init_bounds(inst, UB, sol)
        assert rel_close(exact_value(inst, hp, bounds), oracle_value(seed))


def _fields(b):
    return [b.M, b.u, b.l, np.array([b.UB_w if b.UB_w is not None else np.inf]),
            np.array([b.UB_b - b.LB_b])]


def test_each_tightening_step_is_monotone():
    for seed in range(10):
        inst, hp = small(seed)
        sol, UB, _ = initial_solution(inst, hp)
        b0 = init_bounds(inst, UB, sol)
        b1 = tighten_w(inst, hp, b0, incumbent=sol)
        b2 = tighten_b(inst, hp, b1)
        b3 = tighten_M(inst, hp, b2, 1)
        for old, new in zip([b0, b1, b2], [b1, b2, b3]):
            for fo, fn in zip(_fields(old), _fields(new)):
                assert np.all(fn <= fo)
            assert rlfs_violation(inst, hp, new, sol) <= 1e-6


def test_variant2_never_below_variant1():
    for seed in range(10):
        inst, hp = small(seed)
        sol, UB, _ = initial_solution(inst, hp)
        b = tighten_b(inst, hp, tighten_w(inst, hp, init_bounds(inst, UB, sol), incumbent=sol))
        m1 = tighten_M(inst, hp, b, 1).M
        m2 = tighten_M(inst, hp, b, 2).M
        assert np.all(m2 >= m1 - 1e-9)


def test_tightening_keeps_optimum():
    for seed in range(20):
        inst, hp = small(seed)
        a1 = run_algorithm1(inst, hp)
        assert rel_close(exact_value(inst, hp, a1.bounds), oracle_value(seed))


def test_loop_respects_max_iters():
    inst, hp = small(0)
    for k in (1, 2, 3):
        a1 = run_algorithm1(inst, hp, stop=StopRule(max_iters=k, min_rel_improvement=0.0))
        assert a1.iterations <= k


def test_no_second_pass_without_improvement():
    # C = 0: UB = UB_w = 0, and the intercept interval [-1, 1] is final after the first solve
    X = np.array([[0.0], [1.0], [0.2], [0.7]])
    y = np.array([-1, 1, -1, 1.0])
    inst, hp = SvmInstance(X, y), HyperParams(0.0, 1)
    a1 = run_algorithm1(inst, hp)
    assert a1.iterations == 1
    assert a1.bounds.UB_w == pytest.approx(0.0, abs=1e-8)
    assert a1.bounds.LB_b == pytest.approx(-1.0, abs=1e-6)
    assert a1.bounds.UB_b == pytest.approx(1.0, abs=1e-6)
    loop = [r for r in a1.trace if r["stage"].startswith("UB-M")]
    assert loop and not any(r.get("changed") for r in loop)


def test_trace_records(tmp_path):
    inst, hp = small(1)
    path = tmp_path / "trace.jsonl"
    a1 = run_algorithm1(inst, hp, trace=str(path))
    lines = [json.loads(s) for s in path.read_text().splitlines()]
    assert lines == json.loads(json.dumps(a1.trace))
    assert {"stage", "field", "old", "new"} <= set(lines[0])
    stages = {r["stage"] for r in lines}
    assert {"init", "UB-w", "UB-b", "LB-b"} <= stages


def test_default_variant():
    assert default_variant(500) == 1
    assert default_variant(501) == 2
    with pytest.raises(ValueError):
        run_algorithm1(*small(0), variant=3)
