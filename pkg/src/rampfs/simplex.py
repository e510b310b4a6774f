"""Bounded-variable revised primal simplex.

Every row ``lo_i <= A_i x <= up_i`` is written as an equation with a logical
variable ``r_i = A_i x`` carrying the row bounds, so the working system is
``A x - r + diag(s) a = 0`` with artificials ``a >= 0`` that absorb the
initial residual.  Phase I minimizes ``sum(a)``; phase II fixes the
artificials at zero and minimizes the true objective.  Free structural
variables are kept as they are (nonbasic at zero, never leave the basis).

Pricing is Dantzig's largest reduced cost; after ``bland_after`` consecutive
non-improving pivots the solver switches to Bland's smallest-index rule for
the rest of the phase, which rules out cycling.
"""
from __future__ import annotations

import numpy as np

from .lp import INF, LinearProgram, LpSolution, LpStatus, NumericalFailure, Tolerances

_AT_LB, _AT_UB, _FREE, _BASIC = 0, 1, 2, 3


class _Tableau:
    def __init__(self, M: np.ndarray, lb: np.ndarray, ub: np.ndarray, x: np.ndarray,
                 basis: list[int], state: np.ndarray, tol: Tolerances, max_iter: int,
                 bland_after: int):
        self.M = M
        self.lb, self.ub = lb, ub
        self.x = x
        self.basis = basis
        self.state = state
        self.tol = tol
        self.max_iter = max_iter
        self.bland_after = bland_after
        self.iterations = 0
        self._refactor()

    def _refactor(self) -> None:
        B = self.M[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis") from exc
        nb = np.ones(self.M.shape[1], bool)
        nb[self.basis] = False
        rhs = -self.M[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs

    def optimize(self, c: np.ndarray) -> str:
        tol = self.tol
        m = self.M.shape[0]
        stall = 0
        bland = False
        since_refactor = 0
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalFailure(f"simplex iteration cap {self.max_iter} reached")
            cB = c[self.basis]
            y = cB @ self.Binv
            d = c - y @ self.M
            d[self.basis] = 0.0
            st = self.state
            can_up = ((st == _AT_LB) | (st == _FREE)) & (d < -tol.optimality) & (self.ub > self.lb)
            can_dn = ((st == _AT_UB) | (st == _FREE)) & (d > tol.optimality) & (self.ub > self.lb)
            eligible = np.flatnonzero(can_up | can_dn)
            if eligible.size == 0:
                return "optimal"
            if bland:
                q = int(eligible[0])
            else:
                q = int(eligible[np.argmax(np.abs(d[eligible]))])
            direction = 1.0 if can_up[q] else -1.0

            alpha = self.Binv @ self.M[:, q]
            # basic values move as x_B - direction * t * alpha
            step = direction * alpha
            best_t = INF
            leave = -1
            leave_to = _AT_LB
            if np.isfinite(self.ub[q]) and np.isfinite(self.lb[q]):
                best_t = self.ub[q] - self.lb[q]
            piv = tol.zero * 100
            for pos in range(m):
                s = step[pos]
                if abs(s) <= piv:
                    continue
                j = self.basis[pos]
                if s > 0:
                    if self.lb[j] == -INF:
                        continue
                    t = max(self.x[j] - self.lb[j], 0.0) / s
                    to = _AT_LB
                else:
                    if self.ub[j] == INF:
                        continue
                    t = max(self.ub[j] - self.x[j], 0.0) / -s
                    to = _AT_UB
                better = t < best_t - tol.zero
                tie = (not better) and abs(t - best_t) <= tol.zero and leave >= 0
                if tie:
                    if bland:
                        better = j < self.basis[leave]
                    else:
                        better = abs(s) > abs(step[leave])
                if better:
                    best_t, leave, leave_to = t, pos, to
            if best_t == INF:
                return "unbounded"

            self.iterations += 1
            if best_t <= tol.zero:
                stall += 1
                if stall >= self.bland_after:
                    bland = True
            else:
                stall = 0

            self.x[self.basis] -= best_t * step
            self.x[q] += direction * best_t
            if leave < 0:
                # bound flip of the entering variable, basis unchanged
                self.state[q] = _AT_UB if direction > 0 else _AT_LB
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                continue
            j_out = self.basis[leave]
            self.x[j_out] = self.lb[j_out] if leave_to == _AT_LB else self.ub[j_out]
            self.state[j_out] = leave_to
            self.state[q] = _BASIC
            self.basis[leave] = q
            # eta update of the explicit inverse
            p = alpha[leave]
            row = self.Binv[leave] / p
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            since_refactor += 1
            if since_refactor >= 50:
                self._refactor()
                since_refactor = 0


def solve_simplex(lp: LinearProgram, tol: Tolerances = Tolerances(),
                  max_iter: int | None = None, bland_after: int = 1000) -> LpSolution:
    """Solve ``lp`` with the two-phase bounded revised simplex.

    The iteration cap defaults to ``50 * (rows + cols)`` per phase.
    """
    n, m = lp.num_vars, lp.num_rows
    A = lp.A.toarray()
    row_lo, row_up = lp.row_bounds()
    sign = -1.0 if lp.maximize else 1.0
    c = sign * lp.c
    if max_iter is None:
        max_iter = 50 * (m + n) + 50

    # structural start: finite bound nearest zero, else zero (free)
    x0 = np.where(np.isfinite(lp.lb), lp.lb, np.where(np.isfinite(lp.ub), lp.ub, 0.0))
    state = np.where(np.isfinite(lp.lb), _AT_LB, np.where(np.isfinite(lp.ub), _AT_UB, _FREE))
    act = A @ x0
    r0 = np.clip(act, row_lo, row_up)
    resid = act - r0
    s = np.where(resid > 0, -1.0, 1.0)

    M = np.hstack([A, -np.eye(m), np.diag(s)])
    lb = np.concatenate([lp.lb, row_lo, np.zeros(m)])
    ub = np.concatenate([lp.ub, row_up, np.full(m, INF)])
    x = np.concatenate([x0, r0, np.abs(resid)])
    st = np.concatenate([state, np.full(m, _AT_LB), np.full(m, _AT_LB)])
    basis = []
    for i in range(m):
        violated = abs(resid[i]) > 0.0
        if violated:
            basis.append(n + m + i)
        else:
            basis.append(n + i)
    basis_arr = np.array(basis, dtype=int)
    st[basis_arr] = _BASIC
    # logical variables that are nonbasic sit at the violated bound
    for i in range(m):
        if abs(resid[i]) > 0.0:
            st[n + i] = _AT_LB if r0[i] == row_lo[i] else _AT_UB
    if m == 0:
        # only bounds: each variable independently at its best bound
        xs = x0.copy()
        for j in range(n):
            if c[j] > 0:
                xs[j] = lp.lb[j]
            elif c[j] < 0:
                xs[j] = lp.ub[j]
            if not np.isfinite(xs[j]):
                return LpSolution(status=LpStatus.UNBOUNDED)
        return LpSolution(LpStatus.OPTIMAL, lp.objective_value(xs), xs, lp.c.copy(), np.zeros(0), 0)

    tab = _Tableau(M, lb, ub, x, basis, st, tol, max_iter, bland_after)
    c1 = np.concatenate([np.zeros(n + m), np.ones(m)])
    tab.optimize(c1)
    if tab.x[n + m:].sum() > tol.feasibility * max(1.0, m):
        return LpSolution(status=LpStatus.INFEASIBLE, iterations=tab.iterations)
    # phase II: artificials pinned at zero
    tab.ub[n + m:] = 0.0
    tab.x[n + m:] = np.where(st[n + m:] == _BASIC, tab.x[n + m:], 0.0)
    tab.max_iter = tab.iterations + max_iter
    c2 = np.concatenate([c, np.zeros(2 * m)])
    tab._refactor()
    if tab.optimize(c2) == "unbounded":
        return LpSolution(status=LpStatus.UNBOUNDED, iterations=tab.iterations)
    tab._refactor()
    xs = tab.x[:n].copy()
    y = c2[tab.basis] @ tab.Binv
    d = c - y @ A
    return LpSolution(
        status=LpStatus.OPTIMAL,
        objective=lp.objective_value(xs),
        x=xs,
        reduced_costs=sign * d,
        duals=sign * y,
        iterations=tab.iterations,
    )
