"""Linear programs with bounded variables: container, solvers and LP-file export.

A :class:`LinearProgram` stores a sparse constraint matrix whose rows carry a
sense (``'<'``, ``'>'`` or ``'='``) and a right-hand side, together with
per-variable lower/upper bounds (either side may be infinite).  Two solvers
are available behind :func:`solve_lp`:

``"highs"``
    The HiGHS dual simplex through ``highspy``.  Default; fast.
``"simplex"``
    The bounded-variable revised primal simplex of :mod:`rampfs.simplex`.
    Slow, but small and auditable; used to cross-check HiGHS in the tests.

Sign conventions are shared by both backends: reduced costs are
``c - A.T @ duals`` for the objective *as stated* (also for maximization).
"""
from __future__ import annotations

import enum
import io
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

import numpy as np
import scipy.sparse as sp

__all__ = [
    "LpStatus",
    "NumericalFailure",
    "Tolerances",
    "LinearProgram",
    "LpBuilder",
    "LpSolution",
    "solve_lp",
    "resolve_with_fixed",
    "write_lp_file",
]

INF = np.inf


class NumericalFailure(RuntimeError):
    """Raised when a solver cannot classify an LP (iteration cap, breakdown)."""


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-7
    zero: float = 1e-9


@dataclass
class LinearProgram:
    """``min/max c @ x`` s.t. ``A[i] @ x (sense[i]) rhs[i]``, ``lb <= x <= ub``.

    ``layout`` is an optional, solver-ignored description of what the columns
    mean (the SVM formulations attach one).
    """

    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    maximize: bool = False
    offset: float = 0.0
    col_names: list[str] | None = None
    row_names: list[str] | None = None
    layout: Any = None

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.sense = np.asarray(self.sense, dtype="<U1")
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_rows(self) -> int:
        return self.rhs.shape[0]

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows as ``lo <= A x <= up``."""
        lo = np.where(self.sense == "<", -INF, self.rhs)
        up = np.where(self.sense == ">", INF, self.rhs)
        return lo, up

    def validate(self) -> None:
        n, m = self.num_vars, self.num_rows
        if self.A.shape != (m, n):
            raise ValueError(f"matrix shape {self.A.shape} does not match ({m}, {n})")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if self.sense.shape != (m,):
            raise ValueError("one sense per row required")
        bad = ~np.isin(self.sense, ["<", ">", "="])
        if bad.any():
            raise ValueError(f"unknown row sense {self.sense[bad][0]!r}")
        if np.isnan(self.lb).any() or np.isnan(self.ub).any():
            raise ValueError("NaN bound")
        if (self.lb == INF).any() or (self.ub == -INF).any():
            raise ValueError("lower bound +inf or upper bound -inf")
        if (self.lb > self.ub).any():
            j = int(np.flatnonzero(self.lb > self.ub)[0])
            raise ValueError(f"variable {j}: lower bound {self.lb[j]} > upper bound {self.ub[j]}")
        if not np.isfinite(self.c).all() or not np.isfinite(self.rhs).all():
            raise ValueError("objective and right-hand sides must be finite")
        A = self.A.copy()
        A.sort_indices()
        rows = np.repeat(np.arange(m), np.diff(A.indptr))
        dup = (np.diff(A.indices) == 0) & (np.diff(rows) == 0)
        if dup.any():
            i = int(rows[np.flatnonzero(dup)[0]])
            raise ValueError(f"row {i} references a variable twice")

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "LinearProgram":
        return replace(self, lb=np.asarray(lb, float), ub=np.asarray(ub, float))

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.offset

    def max_violation(self, x: np.ndarray) -> float:
        """Largest bound or row violation of ``x`` (0 if feasible)."""
        x = np.asarray(x, dtype=float)
        act = self.A @ x
        lo, up = self.row_bounds()
        viol = [0.0]
        if act.size:
            viol.append(float(np.max(np.maximum(lo - act, act - up))))
        viol.append(float(np.max(np.maximum(self.lb - x, x - self.ub), initial=0.0)))
        return max(viol)


class LpBuilder:
    """Incremental assembly of a :class:`LinearProgram` from column blocks and rows."""

    def __init__(self) -> None:
        self._c: list[np.ndarray] = []
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._names: list[str] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []
        self.num_vars = 0

    def add_vars(self, count: int, lb=0.0, ub=INF, cost=0.0, name: str = "x") -> np.ndarray:
        ids = np.arange(self.num_vars, self.num_vars + count)
        self._c.append(np.broadcast_to(np.asarray(cost, float), (count,)).copy())
        self._lb.append(np.broadcast_to(np.asarray(lb, float), (count,)).copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, float), (count,)).copy())
        self._names.extend([name] if count == 1 else [f"{name}_{j}" for j in range(count)])
        self.num_vars += count
        return ids

    def add_row(self, cols: Iterable[int], vals: Iterable[float], sense: str, rhs: float,
                name: str | None = None) -> int:
        i = len(self._rhs)
        for j, a in zip(cols, vals):
            if a != 0.0:
                self._rows.append(i)
                self._cols.append(int(j))
                self._vals.append(float(a))
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        self._row_names.append(name if name is not None else f"r{i}")
        return i

    def build(self, maximize: bool = False, layout: Any = None, offset: float = 0.0) -> LinearProgram:
        m = len(self._rhs)
        A = sp.coo_matrix((self._vals, (self._rows, self._cols)), shape=(m, self.num_vars)).tocsr()
        cat = (lambda parts: np.concatenate(parts) if parts else np.zeros(0))
        lp = LinearProgram(
            c=cat(self._c), A=A, sense=np.array(self._sense, dtype="<U1"), rhs=np.array(self._rhs),
            lb=cat(self._lb), ub=cat(self._ub), maximize=maximize, offset=offset,
            col_names=list(self._names), row_names=list(self._row_names), layout=layout,
        )
        return lp


@dataclass
class LpSolution:
    status: LpStatus
    objective: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve_lp(lp: LinearProgram, method: str = "highs", tol: Tolerances = Tolerances(),
             check: bool = True) -> LpSolution:
    """Solve ``lp`` and classify it as Optimal, Infeasible or Unbounded.

    Raises
    ------
    NumericalFailure
        If the backend stalls, hits its iteration cap, or returns an
        unclassifiable status.
    """
    if check:
        lp.validate()
    if method == "highs":
        from ._highs import solve_highs
        return solve_highs(lp, tol)
    if method == "simplex":
        from .simplex import solve_simplex
        return solve_simplex(lp, tol)
    raise ValueError(f"unknown LP method {method!r}")


def resolve_with_fixed(lp: LinearProgram, fixes: Mapping[int, float], method: str = "highs",
                       tol: Tolerances = Tolerances()) -> LpSolution:
    """Solve ``lp`` with the variables in ``fixes`` pinned (``lower = upper = value``)."""
    lb, ub = lp.lb.copy(), lp.ub.copy()
    for j, val in fixes.items():
        if val < lp.lb[j] - tol.feasibility or val > lp.ub[j] + tol.feasibility:
            raise ValueError(f"fixed value {val} for variable {j} outside [{lp.lb[j]}, {lp.ub[j]}]")
        lb[j] = ub[j] = val
    return solve_lp(lp.with_bounds(lb, ub), method=method, tol=tol)


# ---------------------------------------------------------------- LP files

_NAME_OK = re.compile(r"[^A-Za-z0-9_.\[\]]")


def _lp_names(names: list[str] | None, n: int, prefix: str) -> list[str]:
    if names is None or len(names) != n:
        return [f"{prefix}{j}" for j in range(n)]
    out, seen = [], set()
    for j, name in enumerate(names):
        s = _NAME_OK.sub("_", name)
        if not s or s[0].isdigit() or s[0] in ".e" or s in seen:
            s = f"{prefix}{j}_{s}"
        seen.add(s)
        out.append(s)
    return out


def _fmt(v: float) -> str:
    return repr(float(v))


def _linear_expr(cols: np.ndarray, vals: np.ndarray, names: list[str]) -> str:
    if len(cols) == 0:
        return "0 " + names[0] if names else "0"
    terms = []
    for j, a in zip(cols, vals):
        sign = "-" if a < 0 else "+"
        terms.append(f"{sign} {_fmt(abs(a))} {names[j]}")
    s = " ".join(terms)
    return s[2:] if s.startswith("+ ") else s


def write_lp_file(lp: LinearProgram, target, binaries: Iterable[int] = ()) -> None:
    """Write ``lp`` in CPLEX LP text format to a path or text stream.

    Binary variable ids go to the ``Binaries`` section; there are no general
    integers in this package, so ``Generals`` is never emitted.
    """
    names = _lp_names(lp.col_names, lp.num_vars, "x")
    rnames = _lp_names(lp.row_names, lp.num_rows, "c")
    binaries = sorted(set(int(j) for j in binaries))
    out = io.StringIO()
    out.write("\\ written by rampfs\n")
    if lp.offset:
        out.write(f"\\ objective constant {_fmt(lp.offset)} not included below\n")
    out.write("Maximize\n" if lp.maximize else "Minimize\n")
    nz = np.flatnonzero(lp.c)
    out.write(f" obj: {_linear_expr(nz, lp.c[nz], names)}\n")
    out.write("Subject To\n")
    A = lp.A
    ops = {"<": "<=", ">": ">=", "=": "="}
    for i in range(lp.num_rows):
        sl = slice(A.indptr[i], A.indptr[i + 1])
        expr = _linear_expr(A.indices[sl], A.data[sl], names)
        out.write(f" {rnames[i]}: {expr} {ops[lp.sense[i]]} {_fmt(lp.rhs[i])}\n")
    out.write("Bounds\n")
    for j in range(lp.num_vars):
        lo, up = lp.lb[j], lp.ub[j]
        if lo == 0.0 and up == INF:
            continue
        if lo == -INF and up == INF:
            out.write(f" {names[j]} free\n")
        elif lo == up:
            out.write(f" {names[j]} = {_fmt(lo)}\n")
        else:
            los = "-infinity" if lo == -INF else _fmt(lo)
            ups = "+infinity" if up == INF else _fmt(up)
            out.write(f" {los} <= {names[j]} <= {ups}\n")
    if binaries:
        out.write("Binaries\n")
        for j in binaries:
            out.write(f" {names[j]}\n")
    out.write("End\n")
    text = out.getvalue()
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w") as fh:
            fh.write(text)
