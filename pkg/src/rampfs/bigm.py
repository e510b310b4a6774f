"""Initial feasible solution and big-M tightening.

The pipeline is: l1-SVM, map its solution to a feasible point of the
linearized model (with a budget repair when too many weights are non-zero),
refit on the chosen features and inliers, derive initial bounds from the
resulting objective ``UB``, then shrink them with the tightening LPs.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formulations import (
    BigMBounds,
    ClassExtremes,
    ClassifierSolution,
    DegenerateModelWarning,
    HyperParams,
    SvmInstance,
    build_b_bound_lps,
    build_refit_lp,
    build_svm_l1,
    build_ubm_class_lp,
    build_ubmi_lp,
    build_ubw_lp,
    objective_value,
    rlfs_violation,
)
from .lp import LpStatus, NumericalFailure, solve_lp

__all__ = [
    "StopRule",
    "Algorithm1Result",
    "svm_l1",
    "initial_solution",
    "init_bounds",
    "tighten_w",
    "tighten_b",
    "tighten_M",
    "run_algorithm1",
    "default_variant",
]

# LP optima are accurate to ~1e-7; bounds taken from them are widened by this
# much so round-off can never cut off the true optimum.
SAFETY_REL = 1e-7
SAFETY_ABS = 1e-9


def _widen(value: float) -> float:
    return value + SAFETY_REL * abs(value) + SAFETY_ABS


@dataclass(frozen=True)
class StopRule:
    max_iters: int = 5
    min_rel_improvement: float = 1e-3


@dataclass
class Algorithm1Result:
    bounds: BigMBounds
    solution: ClassifierSolution
    iterations: int
    trace: list[dict]
    svm_support: np.ndarray  # features with non-zero weight in the l1-SVM


def default_variant(n: int) -> int:
    return 1 if n <= 500 else 2


def svm_l1(inst: SvmInstance, C: float, features=None, method: str = "highs") -> ClassifierSolution:
    """Solve the l1-SVM and return it as a full-length solution (z = 0, v = support)."""
    lp = build_svm_l1(inst, C, features)
    sol = solve_lp(lp, method=method)
    if sol.status is not LpStatus.OPTIMAL:
        raise NumericalFailure(f"l1-SVM returned {sol.status.value}")
    lay = lp.layout
    w = np.zeros(inst.d)
    w[lay.features] = sol.x[lay.w]
    xi = np.clip(sol.x[lay.xi], 0.0, None)
    # tiny weights are solver noise
    w[np.abs(w) <= 1e-9] = 0.0
    wp, wm = np.maximum(w, 0.0), np.maximum(-w, 0.0)
    z = np.zeros(inst.n)
    v = (w != 0).astype(float)
    return ClassifierSolution(wp, wm, float(sol.x[lay.b]), xi, z, v, objective_value(wp, wm, xi, z, C))


def _map_candidate(sol: ClassifierSolution) -> tuple[np.ndarray, np.ndarray]:
    """``(v_tilde, z_tilde)``: support of ``w`` and the points with slack above 2."""
    z = (sol.xi > 2.0).astype(float)
    v = (sol.w != 0).astype(float)
    return v, z


def initial_solution(inst: SvmInstance, hp: HyperParams, method: str = "highs",
                     ) -> tuple[ClassifierSolution, float, np.ndarray]:
    """Feasible solution of the linearized model and its objective.

    Returns ``(solution, UB, support)`` where ``support`` lists the features
    with non-zero weight in the first l1-SVM solve.
    """
    hp.check(inst)
    first = svm_l1(inst, hp.C, method=method)
    support = np.flatnonzero(first.w != 0)
    sol = first
    v, z = _map_candidate(sol)
    if v.sum() > hp.B:
        # keep the B largest |w|; ties broken towards the lower index
        order = np.lexsort((np.arange(inst.d), -np.abs(sol.w)))
        keep = np.sort(order[: hp.B])
        sol = svm_l1(inst, hp.C, features=keep, method=method)
        v, z = _map_candidate(sol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        lp = build_refit_lp(inst, hp.C, v, z)
    res = solve_lp(lp, method=method)
    if res.status is not LpStatus.OPTIMAL:
        raise NumericalFailure(f"refit LP returned {res.status.value}")
    out = lp.layout.to_solution(res.x, v_default=v)
    out.xi = np.minimum(out.xi, 2.0)
    out.objective = objective_value(out.w_plus, out.w_minus, out.xi, out.z, hp.C)
    return out, out.objective, support


def _cover(inst: SvmInstance, M: np.ndarray, incumbent: ClassifierSolution | None) -> np.ndarray:
    """Raise ``M_i`` where the incumbent's outliers need more room.

    The diameter formula only bounds what an optimal solution needs; a
    heuristic incumbent with ``z_i = 1`` may sit deeper on the wrong side.
    Larger values never cut off anything, so this keeps the incumbent
    feasible without losing validity.
    """
    if incumbent is None:
        return M
    need = 1.0 - incumbent.xi - incumbent.margins(inst.X, inst.y)
    out = incumbent.z > 0.5
    M = M.copy()
    M[out] = np.maximum(M[out], [_widen(t) for t in need[out]])
    return M


def init_bounds(inst: SvmInstance, UB: float, incumbent: ClassifierSolution | None = None,
                ) -> BigMBounds:
    """``M_i = diam_i * UB`` with the same-class infinity-norm diameter; ``u = l = UB``.

    With ``incumbent`` given, ``M_i`` is raised where needed so that the
    incumbent satisfies its big-M rows.
    """
    UB = float(UB)
    M = _cover(inst, inst.same_class_diameter() * UB, incumbent)
    return BigMBounds(M=M, u=np.full(inst.d, UB), l=np.full(inst.d, UB), UB=UB)


class _Tracer:
    def __init__(self, target=None):
        self.records: list[dict] = []
        self.target = target

    def scalar(self, stage: str, name: str, old, new) -> None:
        f = (lambda t: None if t is None or not np.isfinite(t) else float(t))
        self.records.append({"stage": stage, "field": name, "old": f(old), "new": f(new)})

    def vector(self, stage: str, name: str, old: np.ndarray, new: np.ndarray) -> None:
        self.records.append({"stage": stage, "field": name, "old": float(np.sum(old)),
                             "new": float(np.sum(new)), "changed": int(np.sum(new < old))})

    def flush(self) -> None:
        if self.target is None:
            return
        if isinstance(self.target, list):
            self.target.extend(self.records)
            return
        with Path(self.target).open("a", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")


def _opt(lp, method: str) -> float:
    sol = solve_lp(lp, method=method)
    if sol.status is not LpStatus.OPTIMAL:
        raise NumericalFailure(f"tightening LP returned {sol.status.value}")
    return float(sol.objective)


def tighten_w(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, method: str = "highs",
              tracer: _Tracer | None = None,
              incumbent: ClassifierSolution | None = None) -> BigMBounds:
    """Bound ``sum(w+ + w-)`` and rescale ``M``, ``u``, ``l`` with it (never upwards).

    The rescaled ``M_i`` is not allowed below what ``incumbent`` needs.
    """
    UB_w = min(_widen(max(_opt(build_ubw_lp(inst, hp, bounds), method), 0.0)), bounds.UB)
    if bounds.UB_w is not None:
        UB_w = min(UB_w, bounds.UB_w)
    new = bounds.copy()
    new.UB_w = UB_w
    new.M = np.minimum(bounds.M, _cover(inst, inst.same_class_diameter() * UB_w, incumbent))
    new.u = np.minimum(bounds.u, UB_w)
    new.l = np.minimum(bounds.l, UB_w)
    if tracer is not None:
        tracer.scalar("UB-w", "UB_w", bounds.UB_w, new.UB_w)
        tracer.vector("UB-w", "M", bounds.M, new.M)
        tracer.vector("UB-w", "u", bounds.u, new.u)
        tracer.vector("UB-w", "l", bounds.l, new.l)
    return new


def tighten_b(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, method: str = "highs",
              tracer: _Tracer | None = None) -> BigMBounds:
    """Bound the intercept from above and below."""
    up, lo = build_b_bound_lps(inst, hp, bounds)
    ub_b, lb_b = _opt(up, method), _opt(lo, method)
    new = bounds.copy()
    new.UB_b = min(bounds.UB_b, ub_b + SAFETY_REL * abs(ub_b) + SAFETY_ABS)
    new.LB_b = max(bounds.LB_b, lb_b - SAFETY_REL * abs(lb_b) - SAFETY_ABS)
    if tracer is not None:
        tracer.scalar("UB-b", "UB_b", bounds.UB_b, new.UB_b)
        tracer.scalar("LB-b", "LB_b", bounds.LB_b, new.LB_b)
    return new


def tighten_M(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, variant: int,
              method: str = "highs", tracer: _Tracer | None = None) -> BigMBounds:
    """One pass of big-M tightening.

    Variant 1 solves one LP per individual; variant 2 one LP per class using
    the class-wise feature extremes.  All LPs see the same (old) bounds and the
    updates are applied together afterwards.
    """
    if variant == 1:
        vals = np.array([_opt(build_ubmi_lp(inst, hp, bounds, i), method) for i in range(inst.n)])
    elif variant == 2:
        ext = ClassExtremes.from_instance(inst)
        vals = np.empty(inst.n)
        for cls in (1, -1):
            vals[inst.y == cls] = _opt(build_ubm_class_lp(inst, hp, bounds, ext, cls), method)
    else:
        raise ValueError("variant must be 1 or 2")
    vals = np.maximum(np.array([_widen(t) for t in vals]), 0.0)
    new = bounds.copy()
    new.M = np.minimum(bounds.M, vals)
    if tracer is not None:
        tracer.vector(f"UB-M/variant{variant}", "M", bounds.M, new.M)
    return new


def _size(b: BigMBounds) -> float:
    return float(np.sum(b.M) + (b.UB_w if b.UB_w is not None else b.UB) + (b.UB_b - b.LB_b))


def _check_safe(inst, hp, bounds, sol, stage) -> None:
    viol = rlfs_violation(inst, hp, bounds, sol)
    if viol > 1e-6:
        raise NumericalFailure(f"incumbent infeasible after {stage} (violation {viol:.3g})")


def run_algorithm1(inst: SvmInstance, hp: HyperParams, variant: int | None = None,
                   stop: StopRule = StopRule(), method: str = "highs", trace=None,
                   initial: tuple[ClassifierSolution, float, np.ndarray] | None = None,
                   ) -> Algorithm1Result:
    """Initial solution, initial bounds, then the tightening loop.

    Parameters
    ----------
    variant : {1, 2}, optional
        Big-M tightening variant; defaults to 1 for ``n <= 500``, else 2.
    stop : StopRule
        The loop ends after ``max_iters`` passes or once a pass shrinks
        ``sum(M) + UB_w + (UB_b - LB_b)`` by less than ``min_rel_improvement``
        (relative).
    trace : list or path, optional
        Receives the tightening records.
    initial : tuple, optional
        Precomputed output of :func:`initial_solution`.

    Returns
    -------
    Algorithm1Result
    """
    variant = default_variant(inst.n) if variant is None else variant
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    tracer = _Tracer(trace)
    sol, UB, support = initial if initial is not None else initial_solution(inst, hp, method)
    bounds = init_bounds(inst, UB, sol)
    tracer.scalar("init", "UB", None, UB)
    tracer.vector("init", "M", bounds.M, bounds.M)
    _check_safe(inst, hp, bounds, sol, "init")
    bounds = tighten_w(inst, hp, bounds, method, tracer, sol)
    _check_safe(inst, hp, bounds, sol, "UB-w")
    bounds = tighten_b(inst, hp, bounds, method, tracer)
    _check_safe(inst, hp, bounds, sol, "UB-b")
    iters = 0
    while iters < stop.max_iters:
        before = _size(bounds)
        bounds = tighten_w(inst, hp, bounds, method, tracer, sol)
        bounds = tighten_b(inst, hp, bounds, method, tracer)
        bounds = tighten_M(inst, hp, bounds, variant, method, tracer)
        iters += 1
        _check_safe(inst, hp, bounds, sol, f"pass {iters}")
        after = _size(bounds)
        if before - after < stop.min_rel_improvement * max(abs(before), 1e-12):
            break
    tracer.flush()
    return Algorithm1Result(bounds, sol, iters, tracer.records, support)
