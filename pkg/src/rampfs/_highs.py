"""Thin adapter between :class:`~rampfs.lp.LinearProgram` and ``highspy``."""
from __future__ import annotations

import highspy
import numpy as np
import scipy.sparse as sp

from .lp import LinearProgram, LpSolution, LpStatus, NumericalFailure, Tolerances

_MS = highspy.HighsModelStatus


def new_highs(tol: Tolerances) -> highspy.Highs:
    h = highspy.Highs()
    h.silent()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("presolve", "off")
    h.setOptionValue("primal_feasibility_tolerance", min(tol.feasibility, 1e-7))
    h.setOptionValue("dual_feasibility_tolerance", min(tol.optimality, 1e-7))
    h.setOptionValue("random_seed", 0)
    return h


def to_highs_lp(lp: LinearProgram) -> highspy.HighsLp:
    A = sp.csc_matrix(lp.A)
    A.sort_indices()
    hl = highspy.HighsLp()
    hl.num_col_ = lp.num_vars
    hl.num_row_ = lp.num_rows
    hl.col_cost_ = lp.c
    hl.col_lower_ = lp.lb
    hl.col_upper_ = lp.ub
    lo, up = lp.row_bounds()
    hl.row_lower_ = lo
    hl.row_upper_ = up
    hl.sense_ = highspy.ObjSense.kMaximize if lp.maximize else highspy.ObjSense.kMinimize
    hl.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    hl.a_matrix_.start_ = A.indptr.astype(np.int32)
    hl.a_matrix_.index_ = A.indices.astype(np.int32)
    hl.a_matrix_.value_ = A.data
    return hl


def classify(h: highspy.Highs, lp: LinearProgram) -> LpStatus:
    """Map the HiGHS model status to an exact LP classification."""
    ms = h.getModelStatus()
    if ms == _MS.kOptimal:
        return LpStatus.OPTIMAL
    if ms == _MS.kInfeasible:
        return LpStatus.INFEASIBLE
    if ms == _MS.kUnbounded:
        return LpStatus.UNBOUNDED
    if ms == _MS.kUnboundedOrInfeasible:
        # decide with a zero objective: feasible => unbounded
        probe = new_highs(Tolerances())
        hl = to_highs_lp(lp)
        hl.col_cost_ = np.zeros(lp.num_vars)
        probe.passModel(hl)
        probe.run()
        pm = probe.getModelStatus()
        if pm == _MS.kOptimal:
            return LpStatus.UNBOUNDED
        if pm in (_MS.kInfeasible, _MS.kUnboundedOrInfeasible):
            return LpStatus.INFEASIBLE
    raise NumericalFailure(f"HiGHS returned {h.modelStatusToString(ms)}")


def read_solution(h: highspy.Highs, lp: LinearProgram, status: LpStatus) -> LpSolution:
    info = h.getInfo()
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status=status, iterations=int(info.simplex_iteration_count))
    s = h.getSolution()
    x = np.array(s.col_value)
    return LpSolution(
        status=status,
        objective=lp.objective_value(x),
        x=x,
        reduced_costs=np.array(s.col_dual),
        duals=np.array(s.row_dual),
        iterations=int(info.simplex_iteration_count),
    )


def solve_highs(lp: LinearProgram, tol: Tolerances) -> LpSolution:
    h = new_highs(tol)
    h.passModel(to_highs_lp(lp))
    h.run()
    return read_solution(h, lp, classify(h, lp))
