"""Branch and bound for linear programs with binary variables.

Node relaxations are solved by HiGHS, re-using one model whose binary column
bounds are changed per node, so every node LP is warm-started from the basis
left by the previous one.  The tree search is best-bound with depth-first
plunging: after a node is branched the search dives into the child on the
rounding side of the branching variable, and falls back to the open node with
the smallest bound once the dive is pruned, infeasible or integral.

Three clocks can stop a solve early (all measured from the start):

* ``t_limit``  total wall clock;
* ``t_fea``    give up if no incumbent exists yet;
* ``t_inc``    give up if the incumbent has not strictly improved for this long
  (the clock starts at the first incumbent).
"""
from __future__ import annotations

import enum
import heapq
import itertools
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .lp import INF, LinearProgram, LpStatus, NumericalFailure, Tolerances, solve_lp

__all__ = ["MilpProblem", "SolveLimits", "MilpStatus", "MilpSolution", "solve_milp"]


@dataclass
class MilpProblem:
    lp: LinearProgram
    binaries: np.ndarray

    def __post_init__(self) -> None:
        self.binaries = np.unique(np.asarray(self.binaries, dtype=int))

    @property
    def layout(self):
        return self.lp.layout

    def validate(self) -> None:
        self.lp.validate()
        b = self.binaries
        if b.size and (b.min() < 0 or b.max() >= self.lp.num_vars):
            raise ValueError("binary id out of range")
        if (self.lp.lb[b] < 0).any() or (self.lp.ub[b] > 1).any():
            raise ValueError("binary variables need bounds inside [0, 1]")


@dataclass(frozen=True)
class SolveLimits:
    t_limit: float | None = None
    t_fea: float | None = None
    t_inc: float | None = None
    gap_tol: float = 0.0
    int_tol: float = 1e-9
    node_limit: int | None = None

    def __post_init__(self) -> None:
        for name in ("t_limit", "t_fea", "t_inc"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive or None")
        if self.gap_tol < 0:
            raise ValueError("gap tolerance must be non-negative")


class MilpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "FeasibleLimitHit"
    INFEASIBLE = "Infeasible"
    NO_INCUMBENT = "NoIncumbent"


@dataclass
class MilpSolution:
    status: MilpStatus
    x: np.ndarray | None
    objective: float
    best_bound: float
    gap: float
    elapsed: float
    nodes: int
    warm_start_rejected: bool = False
    events: list[dict] = field(default_factory=list)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


def relative_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return INF
    return abs(incumbent - bound) / (1e-10 + abs(incumbent))


class _HighsRelaxation:
    def __init__(self, lp: LinearProgram, tol: Tolerances):
        from ._highs import classify, new_highs, to_highs_lp

        self._classify = classify
        self.lp = lp
        self.h = new_highs(tol)
        self.h.passModel(to_highs_lp(lp))

    def solve(self, cols: np.ndarray, lb: np.ndarray, ub: np.ndarray, time_left: float | None):
        h = self.h
        if cols.size:
            h.changeColsBounds(len(cols), cols.astype(np.int32), lb.astype(float), ub.astype(float))
        # the HiGHS run clock accumulates over calls on the same object
        limit = INF if time_left is None else h.getRunTime() + float(time_left)
        h.setOptionValue("time_limit", limit)
        h.run()
        ms = h.getModelStatus()
        if ms == ms.kTimeLimit:
            return "time", None
        if ms == ms.kOptimal:
            return LpStatus.OPTIMAL, np.array(h.getSolution().col_value)
        if ms == ms.kInfeasible:
            return LpStatus.INFEASIBLE, None
        if ms != ms.kUnboundedOrInfeasible and ms != ms.kUnbounded:
            # a warm start can leave the dual simplex undecided; retry cold
            h.clearSolver()
            h.run()
            ms = h.getModelStatus()
            if ms == ms.kTimeLimit:
                return "time", None
            if ms == ms.kOptimal:
                return LpStatus.OPTIMAL, np.array(h.getSolution().col_value)
            if ms == ms.kInfeasible:
                return LpStatus.INFEASIBLE, None
        lp = self.lp.with_bounds(self.lp.lb.copy(), self.lp.ub.copy())
        lp.lb[cols], lp.ub[cols] = lb, ub
        status = self._classify(h, lp)
        if status is LpStatus.OPTIMAL:
            return status, np.array(h.getSolution().col_value)
        return status, None


class _SimplexRelaxation:
    def __init__(self, lp: LinearProgram, tol: Tolerances):
        self.lp, self.tol = lp, tol

    def solve(self, cols, lb, ub, time_left):
        lo, up = self.lp.lb.copy(), self.lp.ub.copy()
        lo[cols], up[cols] = lb, ub
        sol = solve_lp(self.lp.with_bounds(lo, up), method="simplex", tol=self.tol, check=False)
        return sol.status, (sol.x if sol.optimal else None)


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    depth: int = field(compare=False)
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)


def _as_vector(values, n: int) -> np.ndarray:
    if isinstance(values, Mapping):
        x = np.full(n, np.nan)
        for j, v in values.items():
            x[int(j)] = v
        return x
    return np.asarray(values, dtype=float).copy()


def solve_milp(problem: MilpProblem, limits: SolveLimits = SolveLimits(),
               warm_start=None, *, heuristic: Callable[[np.ndarray], Mapping[int, float] | None] | None = None,
               heuristic_freq: int = 20, event_log=None, method: str = "highs",
               tol: Tolerances = Tolerances()) -> MilpSolution:
    """Solve a binary MILP (minimization or maximization) by branch and bound.

    Parameters
    ----------
    problem : MilpProblem
    limits : SolveLimits
        Time controls, relative gap and integrality tolerance.
    warm_start : array or mapping, optional
        Candidate solution.  It is checked; an infeasible one is dropped and
        ``warm_start_rejected`` is set on the result.
    heuristic : callable, optional
        Maps a node relaxation ``x`` to a dict of variable fixings.  The LP is
        re-solved under those fixings and the result kept if integral.  Called
        at the root and every ``heuristic_freq`` nodes.
    event_log : str, path or list, optional
        Receives one record per incumbent change (and the final state):
        ``{"t", "node", "incumbent", "bound"}``.  A path gets JSON lines.
    method : {"highs", "simplex"}
        Relaxation engine.

    Returns
    -------
    MilpSolution
        ``best_bound`` and ``objective`` are in the problem's own sense.
    """
    problem.validate()
    lp = problem.lp
    n = lp.num_vars
    bins = problem.binaries
    sign = -1.0 if lp.maximize else 1.0
    off = lp.offset
    start = time.perf_counter()
    events: list[dict] = []

    engine = _HighsRelaxation(lp, tol) if method == "highs" else _SimplexRelaxation(lp, tol)

    inc_x: np.ndarray | None = None
    inc_val = INF  # minimization sense
    last_improve = None
    nodes = 0

    def elapsed() -> float:
        return time.perf_counter() - start

    def prune_level() -> float:
        return inc_val - (1e-9 + limits.gap_tol * abs(inc_val)) if np.isfinite(inc_val) else INF

    def feasible(x: np.ndarray) -> bool:
        if np.isnan(x).any():
            return False
        frac = np.abs(x[bins] - np.round(x[bins]))
        if (frac > limits.int_tol).any():
            return False
        return lp.max_violation(x) <= 1e-6

    def offer(x: np.ndarray, bound_now: float) -> bool:
        nonlocal inc_x, inc_val, last_improve
        x = x.copy()
        x[bins] = np.round(x[bins])
        val = sign * float(lp.c @ x)
        if val < inc_val - 1e-9:
            inc_x, inc_val = x, val
            last_improve = elapsed()
            events.append({"t": round(elapsed(), 6), "node": nodes, "incumbent": sign * val + off,
                           "bound": sign * min(bound_now, val) + off})
            return True
        return False

    rejected = False
    if warm_start is not None:
        ws = _as_vector(warm_start, n)
        if ws.shape == (n,) and feasible(ws):
            offer(ws, -INF)
        else:
            rejected = True

    root = _Node(-INF, 0, 0, lp.lb[bins].copy(), lp.ub[bins].copy())
    heap: list[_Node] = [root]
    stack: list[_Node] = []
    counter = itertools.count(1)
    stop_reason = None

    def open_bound() -> float:
        cands = [nd.bound for nd in stack]
        if heap:
            cands.append(heap[0].bound)
        return min(cands) if cands else INF

    def run_heuristic(x_relax: np.ndarray, node: _Node) -> None:
        fixes = heuristic(x_relax)
        if not fixes:
            return
        cols = np.array(sorted(fixes), dtype=int)
        vals = np.array([fixes[j] for j in cols], dtype=float)
        lo, up = lp.lb.copy(), lp.ub.copy()
        lo[bins], up[bins] = node.lb, node.ub
        lo[cols], up[cols] = vals, vals
        if (lo > up + 1e-12).any():
            return
        sol = solve_lp(lp.with_bounds(lo, up), method=method, tol=tol, check=False)
        if sol.optimal and feasible(sol.x):
            offer(sol.x, node.bound)

    while heap or stack:
        t = elapsed()
        if limits.t_limit is not None and t >= limits.t_limit:
            stop_reason = "time"
            break
        if inc_x is None and limits.t_fea is not None and t >= limits.t_fea:
            stop_reason = "fea"
            break
        if inc_x is not None and limits.t_inc is not None and t - last_improve >= limits.t_inc:
            stop_reason = "inc"
            break
        if limits.node_limit is not None and nodes >= limits.node_limit:
            stop_reason = "nodes"
            break
        if inc_x is not None and limits.gap_tol > 0:
            if relative_gap(inc_val, min(open_bound(), inc_val)) <= limits.gap_tol:
                break

        node = stack.pop() if stack else heapq.heappop(heap)
        if node.bound >= prune_level():
            continue
        time_left = None if limits.t_limit is None else max(limits.t_limit - t, 1e-3)
        status, x = engine.solve(bins, node.lb, node.ub, time_left)
        nodes += 1
        if status == "time":
            heapq.heappush(heap, node)
            stop_reason = "time"
            break
        if status is LpStatus.INFEASIBLE:
            continue
        if status is LpStatus.UNBOUNDED:
            raise NumericalFailure("unbounded LP relaxation in branch and bound")
        obj = sign * float(lp.c @ x)
        if obj >= prune_level():
            continue
        # the LP may leave a fixed binary up to its feasibility tolerance off
        # its bound; branching on it would recreate the same node forever
        xb = np.clip(x[bins], node.lb, node.ub)
        x[bins] = xb
        frac = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        frac[np.abs(xb - np.round(xb)) <= limits.int_tol] = 0.0
        frac[node.lb == node.ub] = 0.0
        if not frac.any():
            offer(x, min(obj, open_bound()))
            continue
        if heuristic is not None and (nodes == 1 or nodes % heuristic_freq == 0):
            run_heuristic(x, node)
            if obj >= prune_level():
                continue
        # most fractional, ties by lowest id (bins is sorted)
        k = int(np.argmax(frac))
        down_lb, down_ub = node.lb.copy(), node.ub.copy()
        down_ub[k] = 0.0
        up_lb, up_ub = node.lb.copy(), node.ub.copy()
        up_lb[k] = 1.0
        down = _Node(obj, next(counter), node.depth + 1, down_lb, down_ub)
        up = _Node(obj, next(counter), node.depth + 1, up_lb, up_ub)
        dive, other = (up, down) if xb[k] >= 0.5 else (down, up)
        heapq.heappush(heap, other)
        stack.append(dive)

    if stop_reason is None:
        bound = inc_val if inc_x is not None else INF
        if inc_x is not None and (heap or stack):
            bound = min(inc_val, open_bound())  # stopped on gap tolerance
        status = MilpStatus.OPTIMAL if inc_x is not None else MilpStatus.INFEASIBLE
    else:
        bound = min(inc_val, open_bound())
        if inc_x is None:
            status = MilpStatus.NO_INCUMBENT
        elif relative_gap(inc_val, bound) <= limits.gap_tol:
            status = MilpStatus.OPTIMAL
        else:
            status = MilpStatus.FEASIBLE

    gap = relative_gap(inc_val, bound) if inc_x is not None else INF
    if inc_x is not None and gap <= limits.gap_tol and status is MilpStatus.OPTIMAL and limits.gap_tol == 0:
        bound = inc_val
    events.append({"t": round(elapsed(), 6), "node": nodes,
                   "incumbent": sign * inc_val + off if inc_x is not None else None,
                   "bound": sign * bound + off if np.isfinite(bound) else None, "final": status.value})
    _write_events(event_log, events)
    return MilpSolution(
        status=status,
        x=inc_x,
        objective=sign * inc_val + off if inc_x is not None else float("nan"),
        best_bound=sign * bound + off,
        gap=gap,
        elapsed=elapsed(),
        nodes=nodes,
        warm_start_rejected=rejected,
        events=events,
    )


def _write_events(target, events: list[dict]) -> None:
    if target is None:
        return
    if isinstance(target, list):
        target.extend(events)
        return
    with open(target, "a") as fh:
        for ev in events:
            fh.write(json.dumps(ev) + "\n")
