"""Builders for every LP/MILP of the ramp-loss feature-budget SVM.

Column order of the full model is ``w+ (d) | w- (d) | b | xi (n) | z (n) | v (d)``;
restricted models keep the same block order but only the columns they need.
Each built problem carries an :class:`SvmLayout` in ``lp.layout`` that maps
its columns back to a :class:`ClassifierSolution`.

The conditional ramp-loss model is never built; its linearization with the
per-individual big-M rows, strengthened by ``xi_i <= 2 (1 - z_i)``, is the
solved form throughout.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .lp import INF, LinearProgram
from .milp import MilpProblem

__all__ = [
    "SvmInstance",
    "HyperParams",
    "ClassifierSolution",
    "BigMBounds",
    "ClassExtremes",
    "SvmLayout",
    "DegenerateModelWarning",
    "EmptyKernel",
    "objective_value",
    "build_svm_l1",
    "build_refit_lp",
    "build_rlfs",
    "build_ubw_lp",
    "build_b_bound_lps",
    "build_ubmi_lp",
    "build_ubm_class_lp",
    "build_restricted",
    "build_relaxed_v",
    "rlfs_violation",
]


class DegenerateModelWarning(UserWarning):
    """A refit LP without any selected feature (only ``b`` and ``xi`` remain)."""


class EmptyKernel(ValueError):
    pass


@dataclass(frozen=True)
class SvmInstance:
    """Training sample: ``X`` is ``n x d``, ``y`` holds labels in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D array")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y disagree on the number of individuals")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise ValueError("need n >= 2 and d >= 1")
        if not np.isfinite(X).all():
            raise ValueError("X contains NaN or infinite entries")
        if not np.isin(y, (-1.0, 1.0)).all():
            raise ValueError("labels must be -1 or +1")
        if not ((y == 1).any() and (y == -1).any()):
            raise ValueError("both classes must be present")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def same_class_diameter(self) -> np.ndarray:
        """``max_j ||x_i - x_j||_inf`` over individuals ``j`` of the class of ``i``."""
        out = np.zeros(self.n)
        for cls in (-1.0, 1.0):
            idx = np.flatnonzero(self.y == cls)
            Xc = self.X[idx]
            # max over j of |x_ik - x_jk| is attained at the class extremes
            hi, lo = Xc.max(axis=0), Xc.min(axis=0)
            out[idx] = np.maximum(hi - Xc, Xc - lo).max(axis=1)
        return out


@dataclass(frozen=True)
class HyperParams:
    C: float
    B: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.C) or self.C < 0:
            raise ValueError("C must be a non-negative number")
        if int(self.B) != self.B or self.B < 1:
            raise ValueError("B must be a positive integer")
        object.__setattr__(self, "B", int(self.B))

    def check(self, inst: SvmInstance) -> None:
        if self.B > inst.d:
            raise ValueError(f"budget B={self.B} exceeds d={inst.d}")


@dataclass
class ClassifierSolution:
    w_plus: np.ndarray
    w_minus: np.ndarray
    b: float
    xi: np.ndarray
    z: np.ndarray
    v: np.ndarray
    objective: float

    @property
    def w(self) -> np.ndarray:
        return self.w_plus - self.w_minus

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.v > 0.5)

    def margins(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``y_i (w . x_i + b)`` for every row."""
        return y * (X @ self.w + self.b)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return X @ self.w + self.b

    def to_dict(self) -> dict:
        return {
            "w_plus": self.w_plus.tolist(),
            "w_minus": self.w_minus.tolist(),
            "b": float(self.b),
            "xi": self.xi.tolist(),
            "z": [int(round(t)) for t in self.z],
            "v": [int(round(t)) for t in self.v],
            "objective": float(self.objective),
            "selected_features": [int(k) for k in self.selected],
        }


def objective_value(w_plus, w_minus, xi, z, C: float) -> float:
    """``sum(w+ + w-) + C (sum(xi) + 2 sum(z))``."""
    return float(np.sum(w_plus) + np.sum(w_minus) + C * (np.sum(xi) + 2.0 * np.sum(z)))


@dataclass
class BigMBounds:
    """Big-M values and the valid inequalities collected by the tightening LPs.

    ``UB_w`` is ``None`` until the weight-sum LP has run; while it is ``None``
    no ``w+_k + w-_k <= UB_w`` rows are generated.  ``LB_b``/``UB_b`` start
    unbounded.
    """

    M: np.ndarray
    u: np.ndarray
    l: np.ndarray
    UB: float
    UB_w: float | None = None
    LB_b: float = -INF
    UB_b: float = INF

    def copy(self) -> "BigMBounds":
        return replace(self, M=self.M.copy(), u=self.u.copy(), l=self.l.copy())

    def validate(self) -> None:
        for name in ("M", "u", "l"):
            a = getattr(self, name)
            if not np.isfinite(a).all() or (a < 0).any():
                raise ValueError(f"{name} must be finite and non-negative")
        if not np.isfinite(self.UB) or self.UB < 0:
            raise ValueError("UB must be finite and non-negative")
        if self.UB_w is not None and self.UB_w > self.UB * (1 + 1e-9) + 1e-9:
            raise ValueError("UB_w cannot exceed UB")
        if self.LB_b > self.UB_b:
            raise ValueError("LB_b > UB_b")

    def to_dict(self) -> dict:
        f = (lambda t: None if t is None or not np.isfinite(t) else float(t))
        return {"M": self.M.tolist(), "u": self.u.tolist(), "l": self.l.tolist(), "UB": float(self.UB),
                "UB_w": f(self.UB_w), "LB_b": f(self.LB_b), "UB_b": f(self.UB_b)}


@dataclass(frozen=True)
class ClassExtremes:
    """Per-feature max/min over each class."""

    pos_max: np.ndarray
    pos_min: np.ndarray
    neg_max: np.ndarray
    neg_min: np.ndarray

    @classmethod
    def from_instance(cls, inst: SvmInstance) -> "ClassExtremes":
        P = inst.X[inst.y == 1]
        N = inst.X[inst.y == -1]
        return cls(P.max(axis=0), P.min(axis=0), N.max(axis=0), N.min(axis=0))


@dataclass
class SvmLayout:
    """Where the SVM quantities live among the columns of a built problem.

    ``features`` are the features that own weight columns; ``xi_rows`` and
    ``z_rows`` the individuals that own slack / outlier columns.  Individuals in
    ``fixed_out`` are outliers by construction (``z_i = 1`` outside the model);
    ``constant`` is their ``2C`` contribution, kept out of the LP objective.
    """

    n: int
    d: int
    C: float
    features: np.ndarray
    b: int
    xi_rows: np.ndarray
    xi: np.ndarray
    wp: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    wm: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    w: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    z_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    z: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    fixed_out: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    constant: float = 0.0
    num_vars: int = 0
    degenerate: bool = False

    def to_solution(self, x: np.ndarray, v_default: np.ndarray | None = None,
                    zero_tol: float = 1e-9) -> ClassifierSolution:
        """Map a column vector to a full-length :class:`ClassifierSolution`.

        Features without a ``v`` column get ``v_default`` (if given) or
        ``v = 1`` exactly when their weight is non-zero.
        """
        wp = np.zeros(self.d)
        wm = np.zeros(self.d)
        if self.w.size:
            w = x[self.w]
            wp[self.features] = np.maximum(w, 0.0)
            wm[self.features] = np.maximum(-w, 0.0)
        else:
            wp[self.features] = np.maximum(x[self.wp], 0.0)
            wm[self.features] = np.maximum(x[self.wm], 0.0)
        xi = np.zeros(self.n)
        xi[self.xi_rows] = np.clip(x[self.xi], 0.0, None)
        z = np.zeros(self.n)
        z[self.fixed_out] = 1.0
        if self.z.size:
            z[self.z_rows] = np.round(np.clip(x[self.z], 0.0, 1.0))
        v = np.zeros(self.d)
        if self.v.size:
            v[self.features] = np.round(np.clip(x[self.v], 0.0, 1.0))
        elif v_default is not None:
            v = np.asarray(v_default, dtype=float).copy()
        else:
            v[self.features] = ((wp + wm)[self.features] > zero_tol).astype(float)
        b = float(x[self.b])
        return ClassifierSolution(wp, wm, b, xi, z, v, objective_value(wp, wm, xi, z, self.C))

    def from_solution(self, sol: ClassifierSolution) -> np.ndarray:
        x = np.zeros(self.num_vars)
        if self.w.size:
            x[self.w] = sol.w[self.features]
        else:
            x[self.wp] = sol.w_plus[self.features]
            x[self.wm] = sol.w_minus[self.features]
        x[self.b] = sol.b
        x[self.xi] = sol.xi[self.xi_rows]
        if self.z.size:
            x[self.z] = sol.z[self.z_rows]
        if self.v.size:
            x[self.v] = sol.v[self.features]
        return x


class _Rows:
    """COO accumulator for vectorized row assembly."""

    def __init__(self) -> None:
        self.r: list[np.ndarray] = []
        self.c: list[np.ndarray] = []
        self.a: list[np.ndarray] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    @property
    def m(self) -> int:
        return len(self.rhs)

    def add(self, cols, vals, sense: str, rhs: float, name: str) -> None:
        cols = np.asarray(cols, dtype=int).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), cols.shape).ravel()
        keep = vals != 0.0
        self.r.append(np.full(int(keep.sum()), self.m))
        self.c.append(cols[keep])
        self.a.append(vals[keep])
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.names.append(name)

    def matrix(self, ncols: int) -> sp.csr_matrix:
        cat = (lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dt))
        return sp.csr_matrix((cat(self.a, float), (cat(self.r, int), cat(self.c, int))),
                             shape=(self.m, ncols))


class _Cols:
    def __init__(self) -> None:
        self.cost: list[np.ndarray] = []
        self.lb: list[np.ndarray] = []
        self.ub: list[np.ndarray] = []
        self.names: list[str] = []
        self.n = 0

    def add(self, count: int, lb, ub, cost, names) -> np.ndarray:
        ids = np.arange(self.n, self.n + count)
        self.cost.append(np.broadcast_to(np.asarray(cost, float), (count,)).copy())
        self.lb.append(np.broadcast_to(np.asarray(lb, float), (count,)).copy())
        self.ub.append(np.broadcast_to(np.asarray(ub, float), (count,)).copy())
        self.names.extend(names)
        self.n += count
        return ids


def _finish(cols: _Cols, rows: _Rows, layout: SvmLayout, maximize: bool = False,
            offset: float = 0.0) -> LinearProgram:
    cat = (lambda parts: np.concatenate(parts) if parts else np.zeros(0))
    layout.num_vars = cols.n
    return LinearProgram(
        c=cat(cols.cost), A=rows.matrix(cols.n), sense=np.array(rows.sense, dtype="<U1"),
        rhs=np.array(rows.rhs, dtype=float), lb=cat(cols.lb), ub=cat(cols.ub), maximize=maximize,
        offset=offset, col_names=cols.names, row_names=rows.names, layout=layout,
    )


def build_svm_l1(inst: SvmInstance, C: float, features=None) -> LinearProgram:
    """The classical l1-norm SVM LP.

    Variables ``eta_k >= 0`` (absolute weights), free ``w_k``, free ``b`` and
    ``xi_i >= 0``; rows ``-eta_k <= w_k <= eta_k`` and the soft margins.
    ``features`` restricts the weight columns (the budget repair re-solves the
    model with some columns removed).
    """
    feats = np.arange(inst.d) if features is None else np.asarray(sorted(features), dtype=int)
    cols, rows = _Cols(), _Rows()
    eta = cols.add(len(feats), 0.0, INF, 1.0, [f"eta_{k}" for k in feats])
    w = cols.add(len(feats), -INF, INF, 0.0, [f"w_{k}" for k in feats])
    b = int(cols.add(1, -INF, INF, 0.0, ["b"])[0])
    xi = cols.add(inst.n, 0.0, INF, C, [f"xi_{i}" for i in range(inst.n)])
    Xs = inst.X[:, feats]
    for i in range(inst.n):
        yi = inst.y[i]
        rows.add(np.r_[w, b, xi[i]], np.r_[yi * Xs[i], yi, 1.0], ">", 1.0, f"margin_{i}")
    for j, k in enumerate(feats):
        rows.add([w[j], eta[j]], [1.0, -1.0], "<", 0.0, f"abs_up_{k}")
        rows.add([w[j], eta[j]], [-1.0, -1.0], "<", 0.0, f"abs_lo_{k}")
    layout = SvmLayout(inst.n, inst.d, C, feats, b, np.arange(inst.n), xi, w=w)
    return _finish(cols, rows, layout)


def build_refit_lp(inst: SvmInstance, C: float, v_fix, z_fix) -> LinearProgram:
    """The l1-SVM restricted to ``v_fix == 1`` features and ``z_fix == 0`` individuals.

    ``xi`` is capped at 2.  The ``2C`` cost of each ``z_fix == 1`` individual
    is recorded in ``layout.constant`` but left out of the LP.  An all-zero
    ``v_fix`` yields an LP over ``b`` and ``xi`` only and emits a
    :class:`DegenerateModelWarning`.
    """
    v_fix = np.asarray(v_fix).round().astype(int)
    z_fix = np.asarray(z_fix).round().astype(int)
    feats = np.flatnonzero(v_fix == 1)
    keep = np.flatnonzero(z_fix == 0)
    out = np.flatnonzero(z_fix == 1)
    if feats.size == 0:
        warnings.warn("refit LP has no selected feature", DegenerateModelWarning, stacklevel=2)
    cols, rows = _Cols(), _Rows()
    wp = cols.add(len(feats), 0.0, INF, 1.0, [f"wp_{k}" for k in feats])
    wm = cols.add(len(feats), 0.0, INF, 1.0, [f"wm_{k}" for k in feats])
    b = int(cols.add(1, -INF, INF, 0.0, ["b"])[0])
    xi = cols.add(len(keep), 0.0, 2.0, C, [f"xi_{i}" for i in keep])
    Xs = inst.X[:, feats]
    for t, i in enumerate(keep):
        yi = inst.y[i]
        rows.add(np.r_[wp, wm, b, xi[t]], np.r_[yi * Xs[i], -yi * Xs[i], yi, 1.0], ">", 1.0,
                 f"margin_{i}")
    layout = SvmLayout(inst.n, inst.d, C, feats, b, keep, xi, wp=wp, wm=wm, fixed_out=out,
                       constant=2.0 * C * len(out), degenerate=feats.size == 0)
    return _finish(cols, rows, layout)


def _model(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, *, features=None, zhat=None,
           relax_v: bool = False, relax_z: bool = False, ub_row: float | None = None,
           force_row=None, outlier_rows: bool = False):
    """Assemble the linearized model over a feature subset and a z-status vector.

    Returns ``(cols, rows, layout, v_ids, z_ids)``.  The objective stored in the
    columns is the minimization objective of the classifier.
    """
    n, d, C = inst.n, inst.d, hp.C
    feats = np.arange(d) if features is None else np.asarray(sorted(set(int(k) for k in features)), int)
    zhat = np.full(n, 2, dtype=int) if zhat is None else np.asarray(zhat, dtype=int)
    free = np.flatnonzero(zhat == 2)
    out = np.flatnonzero(zhat == 1)
    with_xi = np.flatnonzero(zhat != 1)

    cols, rows = _Cols(), _Rows()
    wp = cols.add(len(feats), 0.0, INF, 1.0, [f"wp_{k}" for k in feats])
    wm = cols.add(len(feats), 0.0, INF, 1.0, [f"wm_{k}" for k in feats])
    b = int(cols.add(1, bounds.LB_b, bounds.UB_b, 0.0, ["b"])[0])
    xi = cols.add(len(with_xi), 0.0, 2.0, C, [f"xi_{i}" for i in with_xi])
    z = cols.add(len(free), 0.0, 1.0, 2.0 * C, [f"z_{i}" for i in free])
    v = cols.add(len(feats), 0.0, 1.0, 0.0, [f"v_{k}" for k in feats])
    xi_of = dict(zip(with_xi.tolist(), xi.tolist()))
    z_of = dict(zip(free.tolist(), z.tolist()))

    Xs = inst.X[:, feats]
    for i in range(n):
        yi = inst.y[i]
        base_c = np.r_[wp, wm, b]
        base_a = np.r_[yi * Xs[i], -yi * Xs[i], yi]
        if zhat[i] == 2:
            rows.add(np.r_[base_c, xi_of[i], z_of[i]], np.r_[base_a, 1.0, bounds.M[i]], ">", 1.0,
                     f"bigM_{i}")
        elif zhat[i] == 0:
            rows.add(np.r_[base_c, xi_of[i]], np.r_[base_a, 1.0], ">", 1.0, f"margin_{i}")
        elif outlier_rows:
            rows.add(base_c, base_a, ">", 1.0 - bounds.M[i], f"outlier_{i}")
    for i in free:
        rows.add([xi_of[i], z_of[i]], [1.0, 2.0], "<", 2.0, f"ramp_{i}")
    rows.add(v, 1.0, "<", hp.B, "budget")
    for t, k in enumerate(feats):
        rows.add([wp[t], v[t]], [1.0, -bounds.u[k]], "<", 0.0, f"link_up_{k}")
        rows.add([wm[t], v[t]], [1.0, -bounds.l[k]], "<", 0.0, f"link_lo_{k}")
    if bounds.UB_w is not None:
        for t, k in enumerate(feats):
            rows.add([wp[t], wm[t]], [1.0, 1.0], "<", bounds.UB_w, f"wsum_{k}")
    constant = 2.0 * C * len(out)
    if ub_row is not None:
        rows.add(np.r_[wp, wm, xi, z],
                 np.r_[np.ones(2 * len(feats)), np.full(len(xi), C), np.full(len(z), 2.0 * C)],
                 "<", ub_row - constant, "objective_cap")
    if force_row is not None:
        pos = {k: t for t, k in enumerate(feats.tolist())}
        idx = [v[pos[int(k)]] for k in force_row if int(k) in pos]
        rows.add(idx, 1.0, ">", 1.0, "force_new")
    layout = SvmLayout(n, d, C, feats, b, with_xi, xi, wp=wp, wm=wm, z_rows=free, z=z,
                       v=v, fixed_out=out, constant=constant)
    binaries = []
    if not relax_v:
        binaries.append(v)
    if not relax_z:
        binaries.append(z)
    return cols, rows, layout, (np.concatenate(binaries) if binaries else np.zeros(0, int))


def build_rlfs(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds) -> MilpProblem:
    """The full big-M model with ramp rows, budget, weight links and any
    weight-sum / intercept bounds already recorded in ``bounds``."""
    hp.check(inst)
    cols, rows, layout, bins = _model(inst, hp, bounds)
    return MilpProblem(_finish(cols, rows, layout), bins)


def _relaxed_region(inst, hp, bounds):
    """Continuous relaxation of the full model plus the objective cap at ``bounds.UB``."""
    hp.check(inst)
    cols, rows, layout, _ = _model(inst, hp, bounds, relax_v=True, relax_z=True, ub_row=bounds.UB)
    return cols, rows, layout


def _with_objective(cols: _Cols, cost: np.ndarray) -> _Cols:
    out = _Cols()
    out.cost = [np.asarray(cost, float)]
    out.lb, out.ub, out.names, out.n = cols.lb, cols.ub, cols.names, cols.n
    return out


def build_ubw_lp(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds) -> LinearProgram:
    """Maximize ``sum(w+ + w-)`` over the relaxed region capped by ``UB``."""
    if not np.isfinite(bounds.UB):
        raise ValueError("UB must be finite")
    cols, rows, layout = _relaxed_region(inst, hp, bounds)
    cost = np.zeros(cols.n)
    cost[np.r_[layout.wp, layout.wm]] = 1.0
    return _finish(_with_objective(cols, cost), rows, layout, maximize=True)


def build_b_bound_lps(inst: SvmInstance, hp: HyperParams,
                      bounds: BigMBounds) -> tuple[LinearProgram, LinearProgram]:
    """``(max b, min b)`` over the relaxed region with the weight-sum rows."""
    cols, rows, layout = _relaxed_region(inst, hp, bounds)
    cost = np.zeros(cols.n)
    cost[layout.b] = 1.0
    up = _finish(_with_objective(cols, cost), rows, layout, maximize=True)
    lo = _finish(_with_objective(cols, cost), rows, layout, maximize=False)
    return up, lo


def build_ubmi_lp(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, i: int) -> LinearProgram:
    """Maximize ``1 - xi_i - y_i (w . x_i + b)`` over the relaxed region."""
    if not 0 <= i < inst.n:
        raise IndexError(i)
    cols, rows, layout = _relaxed_region(inst, hp, bounds)
    cost = np.zeros(cols.n)
    yi, xi_row = inst.y[i], inst.X[i]
    cost[layout.wp] = -yi * xi_row
    cost[layout.wm] = yi * xi_row
    cost[layout.b] = -yi
    cost[layout.xi[i]] = -1.0
    return _finish(_with_objective(cols, cost), rows, layout, maximize=True, offset=1.0)


def build_ubm_class_lp(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds,
                       extremes: ClassExtremes, cls: int) -> LinearProgram:
    """One common big-M bound for a whole class, from the class extremes.

    Class +1 maximizes ``1 - (w+ . min+ - w- . max+ + b)``; class -1 maximizes
    ``1 + (w+ . max- - w- . min- + b)``.
    """
    cols, rows, layout = _relaxed_region(inst, hp, bounds)
    cost = np.zeros(cols.n)
    if cls == 1:
        cost[layout.wp] = -extremes.pos_min
        cost[layout.wm] = extremes.pos_max
        cost[layout.b] = -1.0
    elif cls == -1:
        cost[layout.wp] = extremes.neg_max
        cost[layout.wm] = -extremes.neg_min
        cost[layout.b] = 1.0
    else:
        raise ValueError("class must be +1 or -1")
    return _finish(_with_objective(cols, cost), rows, layout, maximize=True, offset=1.0)


def strict_cap(UB: float) -> float:
    """Right-hand side used for 'strictly better than UB' objective rows."""
    return UB - 1e-6 * max(1.0, abs(UB))


def build_restricted(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, kernel, zhat,
                     ub_row: float | None = None, force_row=None,
                     outlier_rows: bool = False) -> MilpProblem:
    """Restricted model over a feature kernel with z fixed according to ``zhat``.

    ``zhat[i]`` is 0 (``z_i = 0``, plain margin row), 1 (``z_i = 1``: no row,
    constant ``2C`` in ``layout.constant``) or 2 (binary ``z_i`` with big-M and
    ramp rows).  ``ub_row`` adds the objective cap ``< UB`` in its strict form
    (see :func:`strict_cap`), counted with the constant part; ``force_row``
    requires at least one of the listed features to be selected.  With
    ``outlier_rows`` the individuals with ``zhat == 1`` keep their big-M row
    at ``z_i = 1``, which makes every solution feasible for the full model.
    """
    kernel = np.asarray(sorted(set(int(k) for k in kernel)), dtype=int)
    if kernel.size == 0:
        raise EmptyKernel("kernel is empty")
    hp.check(inst)
    cap = None if ub_row is None else strict_cap(ub_row)
    cols, rows, layout, bins = _model(inst, hp, bounds, features=kernel, zhat=zhat, ub_row=cap,
                                      force_row=force_row, outlier_rows=outlier_rows)
    return MilpProblem(_finish(cols, rows, layout), bins)


def build_relaxed_v(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds, zhat) -> MilpProblem:
    """All features, ``v`` continuous in [0, 1], ``z`` binary only where ``zhat == 2``."""
    hp.check(inst)
    cols, rows, layout, bins = _model(inst, hp, bounds, zhat=zhat, relax_v=True)
    return MilpProblem(_finish(cols, rows, layout), bins)


def rlfs_violation(inst: SvmInstance, hp: HyperParams, bounds: BigMBounds,
                   sol: ClassifierSolution) -> float:
    """Largest violation of ``sol`` in the full model (0 when feasible).

    Integrality of ``z`` and ``v`` is part of the check.
    """
    prob = build_rlfs(inst, hp, bounds)
    x = prob.lp.layout.from_solution(sol)
    frac = np.abs(x[prob.binaries] - np.round(x[prob.binaries]))
    return max(prob.lp.max_violation(x), float(frac.max(initial=0.0)))
