"""Property tests for the invariants every module must keep."""
import warnings

import numpy as np
import scipy.sparse as sp
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from rampfs.bigm import init_bounds
from rampfs.data import Dataset, inject_label_noise, inject_svm_outliers, stratified_folds
from rampfs.evaluation import CellResult, compute_metrics
from rampfs.formulations import (
    ClassifierSolution,
    HyperParams,
    SvmInstance,
    build_rlfs,
    objective_value,
    rlfs_violation,
)
from rampfs.lp import LinearProgram, LpStatus, solve_lp

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def instances(draw, max_n=14, max_d=4, min_n=4):
    n = draw(st.integers(min_n, max_n))
    d = draw(st.integers(1, max_d))
    seed = draw(st.integers(0, 2**31 - 1))
    r = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = np.round(r.random((n, d)), 3)
    return SvmInstance(X, y), r


def ramp_solution(inst, w, b, C):
    """Feasible point of the budgeted ramp-loss model for a given hyperplane."""
    m = inst.y * (inst.X @ w + b)
    z = (m < -1).astype(float)
    xi = np.where(z > 0, 0.0, np.maximum(0.0, 1.0 - m))
    wp, wm = np.maximum(w, 0.0), np.maximum(-w, 0.0)
    v = (w != 0).astype(float)
    return ClassifierSolution(wp, wm, float(b), xi, z, v, objective_value(wp, wm, xi, z, C))


# ---------------------------------------------------------------- builders

@SETTINGS
@given(instances(), st.floats(0.0, 10.0), st.integers(1, 4))
def test_builder_deterministic(pair, C, B):
    inst, r = pair
    hp = HyperParams(C, min(B, inst.d))
    w = r.normal(size=inst.d)
    w[hp.B:] = 0.0
    sol = ramp_solution(inst, w, r.normal(), C)
    bounds = init_bounds(inst, sol.objective, sol)
    a, b = build_rlfs(inst, hp, bounds), build_rlfs(inst, hp, bounds)
    assert (a.lp.A != b.lp.A).nnz == 0
    for f in ("c", "rhs", "lb", "ub", "sense"):
        assert np.array_equal(getattr(a.lp, f), getattr(b.lp, f))
    assert np.array_equal(a.binaries, b.binaries)


@SETTINGS
@given(instances(), st.floats(0.0, 10.0), st.integers(1, 4))
def test_solution_round_trip_is_feasible(pair, C, B):
    inst, r = pair
    hp = HyperParams(C, min(B, inst.d))
    w = np.round(r.normal(size=inst.d), 3)
    w[r.permutation(inst.d)[hp.B:]] = 0.0
    sol = ramp_solution(inst, w, round(r.normal(), 3), C)
    bounds = init_bounds(inst, sol.objective, sol)
    prob = build_rlfs(inst, hp, bounds)
    x = prob.layout.from_solution(sol)
    assert prob.lp.max_violation(x) <= 1e-7
    assert rlfs_violation(inst, hp, bounds, sol) <= 1e-7
    assert abs(prob.lp.objective_value(x) - sol.objective) <= 1e-9 * max(1.0, abs(sol.objective))
    back = prob.layout.to_solution(x)
    assert np.allclose(back.w, sol.w) and np.array_equal(back.z, sol.z)


# ---------------------------------------------------------------- LP duality

@st.composite
def feasible_lps(draw):
    seed = draw(st.integers(0, 2**31 - 1))
    r = np.random.default_rng(seed)
    n, m = int(r.integers(1, 7)), int(r.integers(0, 6))
    x0 = r.random(n) * 3
    A = r.integers(-3, 4, (m, n)).astype(float)
    sense = r.choice(["<", ">", "="], m)
    ax = A @ x0
    rhs = np.where(sense == "<", ax + r.random(m), np.where(sense == ">", ax - r.random(m), ax))
    lp = LinearProgram(r.integers(-4, 5, n).astype(float), sp.csr_matrix(A.reshape(m, n)), sense, rhs,
                       np.zeros(n), np.full(n, 3.0), maximize=bool(r.random() < 0.5))
    return lp, x0


@SETTINGS
@given(feasible_lps(), st.sampled_from(["highs", "simplex"]))
def test_lp_optimum_beats_any_feasible_point(pair, method):
    lp, x0 = pair
    res = solve_lp(lp, method=method)
    assert res.status is LpStatus.OPTIMAL
    assert lp.max_violation(res.x) <= 1e-7
    sgn = -1.0 if lp.maximize else 1.0
    assert sgn * res.objective <= sgn * lp.objective_value(x0) + 1e-7
    # weak duality with the reported multipliers: c.x - y.(Ax) = rc.x and y.b + bound terms
    dual_obj = res.duals @ lp.rhs + res.reduced_costs @ np.where(
        sgn * res.reduced_costs > 0, lp.lb, lp.ub)
    assert abs(dual_obj - res.objective) <= 1e-6 * max(1.0, abs(res.objective))


# ---------------------------------------------------------------- metrics and aggregation

@given(st.lists(st.tuples(st.sampled_from([1, -1]), st.sampled_from([1, -1])), min_size=1, max_size=60))
def test_metrics_from_counts(pairs):
    p = np.array([a for a, _ in pairs])
    t = np.array([b for _, b in pairs])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = compute_metrics(p, t)
    assert m.TP + m.TN + m.FP + m.FN == len(pairs)
    assert abs(m.ACC - (m.TP + m.TN) / len(pairs)) <= 1e-12
    if m.AUC is not None:
        ref = 0.5 * (m.TP / (m.TP + m.FN) + m.TN / (m.TN + m.FP))
        assert abs(m.AUC - ref) <= 1e-12


@given(st.lists(st.tuples(st.floats(0, 1), st.one_of(st.none(), st.floats(0, 1)), st.integers(0, 9)),
                min_size=1, max_size=10), st.randoms(use_true_random=False))
def test_aggregation_permutation_invariant(rows, rnd):
    folds = [{"status": "Optimal", "ACC": a, "AUC": u, "selected": s, "seconds": 1.0} for a, u, s in rows]
    shuffled = list(folds)
    rnd.shuffle(shuffled)
    assert CellResult(1.0, 1, folds).summary() == CellResult(1.0, 1, shuffled).summary()


# ---------------------------------------------------------------- data

@SETTINGS
@given(instances(max_n=40, min_n=12), st.integers(0, 10_000), st.floats(0.0, 0.25))
def test_perturbations_touch_labels_only(pair, seed, frac):
    # with at most a quarter flipped, neither class can vanish once n >= 12
    inst, _ = pair
    ds = Dataset(inst, None, "h")
    for fn in (lambda: inject_label_noise(ds, frac, seed), lambda: inject_svm_outliers(ds, frac, 1.0, seed)):
        a, b = fn(), fn()
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.X, ds.X)
        assert set(np.unique(a.y)) <= {-1.0, 1.0}


@given(st.integers(30, 80), st.integers(0, 10_000), st.integers(2, 10))
def test_folds_partition(n, seed, k):
    y = np.where(np.arange(n) % 3 == 0, 1.0, -1.0)
    X = np.random.default_rng(seed).random((n, 2))
    plan = stratified_folds(Dataset(SvmInstance(X, y), None, "h"), seed, k)
    idx = np.concatenate(plan.folds)
    assert sorted(idx.tolist()) == list(range(n))
    assert len(plan.folds) == k
