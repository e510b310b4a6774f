"""Dynamic adaptive kernel search over the feature-selection variables.

Phase 1 runs the big-M pipeline and classifies every individual as inlier
(``zhat = 0``), outlier (``zhat = 1``) or undecided (``zhat = 2``, binary
``z``).  Phase 2 ranks features from a relaxation with continuous ``v`` and
builds the initial kernel.  Phase 3 solves a sequence of restricted MILPs
over the kernel plus a bucket of new features, each required to beat the
incumbent, and adapts the kernel and ``zhat`` from their solutions.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bigm import Algorithm1Result, StopRule, run_algorithm1
from .formulations import (
    BigMBounds,
    ClassifierSolution,
    HyperParams,
    SvmInstance,
    build_relaxed_v,
    build_restricted,
    rlfs_violation,
)
from .lp import LpStatus, NumericalFailure, resolve_with_fixed
from .milp import MilpStatus, SolveLimits, solve_milp

__all__ = [
    "DaksParams",
    "KernelState",
    "OrderResult",
    "DaksResult",
    "RelaxationInfeasible",
    "init_zhat",
    "order_features",
    "update_zhat",
    "phase3_iterate",
    "run_daks",
]

POSITIVE = 1e-6  # weight threshold for "takes a positive value"


class RelaxationInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class DaksParams:
    """Tuning knobs.

    Times are seconds.  ``phase3_budget`` caps the iterations of one phase-3
    loop (``None``: one pass over the ordered features).  ``node_limit`` caps
    branch-and-bound nodes per sub-problem, a machine-independent budget that
    keeps runs reproducible when the time limits are never reached.
    """

    delta: float = 0.35
    p: int = 2
    q: int = 2
    t_easy: float = 10.0
    t_fea: float = 120.0
    t_inc: float = 160.0
    t_limit: float = 400.0
    outlier_threshold: float = 1.0
    phase2_rounds: int = 3
    phase3_budget: int | None = None
    node_limit: int | None = None
    variant: int | None = None
    bigm_stop: StopRule = StopRule()

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        for name in ("t_easy", "t_fea", "t_inc", "t_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.p < 1 or self.q < 1 or self.phase2_rounds < 1:
            raise ValueError("p, q and phase2_rounds must be >= 1")
        if self.phase3_budget is not None and self.phase3_budget < 1:
            raise ValueError("phase3_budget must be >= 1")

    def limits(self) -> SolveLimits:
        return SolveLimits(t_limit=self.t_limit, t_fea=self.t_fea, t_inc=self.t_inc,
                           node_limit=self.node_limit)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bigm_stop"] = asdict(self.bigm_stop)
        return d


@dataclass
class KernelState:
    kernel: set[int]
    order: np.ndarray
    visited: np.ndarray
    bucket_size: int
    LB_zhat: float
    zhat_at_lb: np.ndarray
    cursor: int = 0
    not_selected: dict[int, int] = field(default_factory=dict)
    z_last: np.ndarray | None = None  # last z value seen while zhat_i == 2 (-1: none yet)
    z_run: np.ndarray | None = None   # its run length over feasible iterations
    prev_status: MilpStatus | None = None

    def next_bucket(self) -> list[int]:
        out: list[int] = []
        while self.cursor < len(self.order) and len(out) < self.bucket_size:
            k = int(self.order[self.cursor])
            self.cursor += 1
            if not self.visited[k]:
                self.visited[k] = True
                out.append(k)
        return out

    @property
    def exhausted(self) -> bool:
        return not (~self.visited[self.order[self.cursor:]]).any()


@dataclass
class OrderResult:
    r: np.ndarray
    order: np.ndarray
    K0: list[int]
    LB_zhat: float
    relaxed: ClassifierSolution | None


@dataclass
class DaksResult:
    solution: ClassifierSolution
    bounds: BigMBounds
    initial: ClassifierSolution
    ub_history: list[float]
    trace: list[dict]
    rounds: int
    stop_reason: str


def init_zhat(initial: ClassifierSolution, threshold: float = 1.0) -> np.ndarray:
    """Outlier codes from a feasible solution: 1 if ``z = 1``, 2 if ``xi > threshold``, else 0."""
    zhat = np.zeros(len(initial.z), dtype=int)
    zhat[initial.xi > threshold] = 2
    zhat[initial.z > 0.5] = 1
    return zhat


def _solve_feasible(inst, hp, bounds, kernel, zhat, limits, ub_row=None, force_row=None):
    """Restricted MILP whose returned solution is feasible for the full model.

    Individuals with ``zhat == 1`` have no row in the restricted model; if the
    solution then breaks their big-M row in the full model the sub-problem is
    solved again with those rows in place.
    """
    prob = build_restricted(inst, hp, bounds, kernel, zhat, ub_row=ub_row, force_row=force_row)
    res = solve_milp(prob, limits)
    if not res.has_incumbent:
        return res, None
    sol = prob.layout.to_solution(res.x)
    if (zhat == 1).any() and rlfs_violation(inst, hp, bounds, sol) > 1e-6:
        prob = build_restricted(inst, hp, bounds, kernel, zhat, ub_row=ub_row,
                                force_row=force_row, outlier_rows=True)
        res2 = solve_milp(prob, limits)
        res2.elapsed += res.elapsed
        if not res2.has_incumbent:
            return res2, None
        res, sol = res2, prob.layout.to_solution(res2.x)
    return res, sol


def order_features(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, zhat,
                   limits: SolveLimits = SolveLimits(), extra_K0=()) -> OrderResult:
    """Rank features by the ``v``-relaxation and form the initial kernel.

    The relaxation keeps ``z`` binary where ``zhat == 2``; its optimal value
    (plus the ``2C`` constant of fixed outliers) is ``LB_zhat``.  It is then
    re-solved with ``z`` fixed to get reduced costs, and
    ``r_k = -(w+_k + w-_k)`` for features with positive weight, else
    ``min(rc+_k, rc-_k)``.  Ties in ``r`` go to the lower index.
    """
    zhat = np.asarray(zhat, dtype=int)
    prob = build_relaxed_v(inst, hp, bounds, zhat)
    lay = prob.layout
    res = solve_milp(prob, limits)
    if res.status is MilpStatus.INFEASIBLE or not res.has_incumbent:
        raise RelaxationInfeasible(f"v-relaxation returned {res.status.value}")
    LB = float(res.best_bound) + lay.constant
    fixes = {int(j): float(round(res.x[j])) for j in lay.z}
    sol = resolve_with_fixed(prob.lp, fixes)
    if sol.status is not LpStatus.OPTIMAL:
        raise NumericalFailure(f"fixed-z re-solve returned {sol.status.value}")
    wsum = np.zeros(inst.d)
    rc = np.zeros(inst.d)
    wsum[lay.features] = sol.x[lay.wp] + sol.x[lay.wm]
    rc[lay.features] = np.minimum(sol.reduced_costs[lay.wp], sol.reduced_costs[lay.wm])
    pos = wsum > POSITIVE
    r = np.where(pos, -wsum, rc)
    order = np.lexsort((np.arange(inst.d), r))
    K0 = sorted(set(np.flatnonzero(pos).tolist()) | {int(k) for k in extra_K0})
    return OrderResult(r, order, K0, LB, lay.to_solution(sol.x))


def update_zhat(zhat, current: ClassifierSolution, inst: SvmInstance, state: KernelState | None = None,
                q: int = 2, threshold: float = 1.0, strict: bool = False) -> np.ndarray:
    """One application of the outlier-code update rules.

    * ``zhat = 0`` and ``xi >= threshold`` (``>`` when ``strict``) -> 2;
    * ``zhat = 1`` and the point is on the correct side -> 2;
    * ``zhat = 2`` and ``z`` took the same value in the last ``q`` solutions
      obtained while ``z_i`` was binary -> that value.

    Streaks live in ``state`` and only advance when this is called, i.e. on
    feasible iterations.  Without ``state`` the last two rules are skipped.
    """
    zhat = np.asarray(zhat, dtype=int)
    new = zhat.copy()
    xi_hit = current.xi > threshold if strict else current.xi >= threshold
    new[(zhat == 0) & xi_hit] = 2
    new[(zhat == 1) & (current.margins(inst.X, inst.y) >= 0)] = 2
    if state is not None:
        zb = np.round(current.z).astype(int)
        undecided = zhat == 2
        same = undecided & (state.z_last == zb)
        state.z_run[same] += 1
        fresh = undecided & ~same
        state.z_last[fresh] = zb[fresh]
        state.z_run[fresh] = 1
        fix = undecided & (state.z_run >= q)
        new[fix] = state.z_last[fix]
        # a code that changes starts a new history
        changed = new != zhat
        state.z_last[changed] = -1
        state.z_run[changed] = 0
    return new


def _hist(zhat: np.ndarray) -> list[int]:
    return [int(np.sum(zhat == c)) for c in (0, 1, 2)]


def phase3_iterate(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, state: KernelState,
                   zhat: np.ndarray, incumbent: ClassifierSolution, params: DaksParams,
                   ) -> tuple[ClassifierSolution | None, np.ndarray, dict]:
    """One restricted solve: kernel plus the next bucket, capped below the incumbent.

    Returns ``(new_incumbent or None, zhat, record)``.  The kernel, streaks and
    ``zhat`` only change when a solution is found; the cursor always advances.
    """
    bucket = state.next_bucket()
    record = {"bucket": len(bucket), "kernel": len(state.kernel)}
    if not bucket:
        record["status"] = "Exhausted"
        return None, zhat, record
    if state.prev_status is MilpStatus.FEASIBLE:
        force = sorted(set(bucket) | {k for k in state.kernel if incumbent.v[k] < 0.5})
    else:
        force = bucket
    res, sol = _solve_feasible(inst, hp, bounds, sorted(state.kernel | set(bucket)), zhat,
                               params.limits(), ub_row=incumbent.objective, force_row=force)
    record.update(status=res.status.value, nodes=res.nodes, seconds=round(res.elapsed, 3))
    if res.elapsed <= params.t_easy:
        state.bucket_size = math.ceil((1.0 + params.delta) * state.bucket_size)
    state.prev_status = res.status
    if sol is None:
        return None, zhat, record
    if sol.objective >= incumbent.objective:
        # cap enforced up to LP tolerance; do not accept a non-improvement
        return None, zhat, record
    sel = set(np.flatnonzero(sol.v > 0.5).tolist())
    k_plus = set(bucket) & sel
    k_minus = set()
    for k in state.kernel:
        state.not_selected[k] = 0 if k in sel else state.not_selected.get(k, 0) + 1
        if state.not_selected[k] >= params.p:
            k_minus.add(k)
    for k in k_plus:
        state.not_selected[k] = 0
    state.kernel = (state.kernel | k_plus) - k_minus
    for k in k_minus:
        state.not_selected.pop(k, None)
    zhat = update_zhat(zhat, sol, inst, state, params.q, params.outlier_threshold)
    return sol, zhat, record


def _write(target, records: list[dict]) -> None:
    if target is None:
        return
    if isinstance(target, list):
        target.extend(records)
        return
    with Path(target).open("a", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def run_daks(inst: SvmInstance, hp: HyperParams, params: DaksParams = DaksParams(),
             algorithm1: Algorithm1Result | None = None, trace=None,
             time_budget: float | None = None) -> DaksResult:
    """Heuristic solution of the feature-budget ramp-loss SVM.

    Parameters
    ----------
    algorithm1 : Algorithm1Result, optional
        Reuse bounds and initial solution from a previous run.
    trace : list or path, optional
        Receives one JSON record per sub-problem.
    time_budget : float, optional
        Wall-clock cap for the whole search, checked between sub-problems.

    Returns
    -------
    DaksResult
        ``solution`` is the best solution found; it is feasible for the full
        model and never worse than the initial one.
    """
    hp.check(inst)
    start = time.perf_counter()
    a1 = algorithm1 if algorithm1 is not None else run_algorithm1(
        inst, hp, params.variant, params.bigm_stop)
    bounds = a1.bounds
    best = a1.solution
    history = [best.objective]
    records: list[dict] = []
    zhat = init_zhat(best, params.outlier_threshold)
    limits = params.limits()
    stop_reason = "rounds"

    def out_of_time() -> bool:
        return time_budget is not None and time.perf_counter() - start >= time_budget

    def accept(sol: ClassifierSolution) -> bool:
        nonlocal best
        if sol.objective < best.objective:
            best = sol
            history.append(sol.objective)
            return True
        return False

    rounds = 0
    while rounds < params.phase2_rounds:
        rounds += 1
        try:
            ordered = order_features(inst, hp, bounds, zhat, limits,
                                     extra_K0=a1.svm_support if rounds == 1 else ())
        except RelaxationInfeasible:
            stop_reason = "relaxation"
            break
        zhat_at_lb = zhat.copy()  # the codes LB_zhat was computed with
        current = None
        if ordered.K0:
            res, current = _solve_feasible(inst, hp, bounds, ordered.K0, zhat, limits)
            records.append({"phase": 2, "round": rounds, "kernel": len(ordered.K0), "bucket": 0,
                            "status": res.status.value, "UB": best.objective,
                            "LB_zhat": ordered.LB_zhat, "zhat": _hist(zhat)})
        if current is not None:
            accept(current)
            zhat = update_zhat(zhat, current, inst, None, params.q, params.outlier_threshold,
                               strict=True)
        state = KernelState(
            kernel=set(ordered.K0), order=ordered.order, visited=np.zeros(inst.d, bool),
            bucket_size=max(1, len(ordered.K0)), LB_zhat=ordered.LB_zhat, zhat_at_lb=zhat_at_lb,
            z_last=np.full(inst.n, -1), z_run=np.zeros(inst.n, int),
        )
        state.visited[ordered.K0] = True
        # the incumbent's own support must stay available
        state.kernel |= set(np.flatnonzero(best.v > 0.5).tolist())
        state.visited[list(state.kernel)] = True
        it = 0
        phase3_stop = "pass"
        while True:
            if out_of_time():
                phase3_stop = "time"
                break
            if params.phase3_budget is not None and it >= params.phase3_budget:
                phase3_stop = "budget"
                break
            sol, zhat, rec = phase3_iterate(inst, hp, bounds, state, zhat, best, params)
            if rec["status"] == "Exhausted":
                break
            if sol is not None:
                accept(sol)
            rec.update(phase=3, round=rounds, it=it, UB=best.objective, LB_zhat=state.LB_zhat,
                       zhat=_hist(zhat))
            records.append(rec)
            it += 1
            tight = state.LB_zhat >= best.objective - 1e-6 * max(1.0, abs(best.objective))
            if tight:
                phase3_stop = "lb_equal" if np.array_equal(zhat, state.zhat_at_lb) else "lb_zhat_moved"
                break
        records.append({"phase": 3, "round": rounds, "end": phase3_stop, "UB": best.objective})
        if phase3_stop in ("lb_equal", "time"):
            stop_reason = phase3_stop
            break
    _write(trace, records)
    return DaksResult(best, bounds, a1.solution, history, records, rounds, stop_reason)

