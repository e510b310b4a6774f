"""Fitting, prediction, metrics, ten-fold cross-validation and heuristic validation."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bigm import run_algorithm1, svm_l1
from .daks import DaksParams, run_daks
from .data import (
    Dataset,
    array_checksum,
    inject_label_noise,
    inject_svm_outliers,
    scale_features,
    stratified_folds,
)
from .formulations import ClassifierSolution, HyperParams, SvmInstance, build_rlfs, objective_value
from .milp import SolveLimits, solve_milp

__all__ = [
    "UndefinedAUC",
    "Metrics",
    "FitResult",
    "CellResult",
    "CvReport",
    "canonical",
    "fit_model",
    "predict",
    "compute_metrics",
    "run_tfcv",
    "validate_heuristic",
    "DESK_EXACT_LIMITS",
]

SOLVERS = ("exact", "daks", "svm-l1")
PERTURBATIONS = ("none", "label-noise", "svm-outliers")
DESK_EXACT_LIMITS = SolveLimits(t_limit=300.0)


class UndefinedAUC(UserWarning):
    """Truth vector lacks one class; AUC is reported as ``None``."""


@dataclass(frozen=True)
class Metrics:
    TP: int
    TN: int
    FP: int
    FN: int
    ACC: float
    AUC: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def predict(sol: ClassifierSolution, x) -> np.ndarray | int:
    """Sign of ``w . x + b`` with 0 mapped to +1; ``x`` may be one row or a matrix."""
    x = np.asarray(x, dtype=float)
    f = x @ sol.w + sol.b
    out = np.where(f >= 0, 1, -1)
    return int(out) if out.ndim == 0 else out


def compute_metrics(predictions, truth) -> Metrics:
    """Confusion counts, accuracy and the balanced-accuracy AUC.

    ``AUC = (TP/(TP+FN) + TN/(TN+FP)) / 2``; when ``truth`` misses a class it
    is ``None`` and an :class:`UndefinedAUC` warning is issued.
    """
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.shape != t.shape or p.size == 0:
        raise ValueError("predictions and truth must be non-empty and of equal length")
    TP = int(np.sum((p == 1) & (t == 1)))
    TN = int(np.sum((p == -1) & (t == -1)))
    FP = int(np.sum((p == 1) & (t == -1)))
    FN = int(np.sum((p == -1) & (t == 1)))
    acc = (TP + TN) / (TP + TN + FP + FN)
    if TP + FN == 0 or TN + FP == 0:
        warnings.warn("AUC undefined: a class is absent from the truth vector", UndefinedAUC,
                      stacklevel=2)
        auc = None
    else:
        # one integer division: the float is the correctly rounded rational value
        auc = (TP * (TN + FP) + TN * (TP + FN)) / (2 * (TP + FN) * (TN + FP))
    return Metrics(TP, TN, FP, FN, acc, auc)


def canonical(sol: ClassifierSolution, C: float) -> ClassifierSolution:
    """Same classifier with ``v_k = 1`` exactly where ``w_k != 0``.

    ``v`` carries no cost, so a solver may leave it at 1 for unused features;
    switching those off keeps feasibility and the objective.
    """
    w = sol.w_plus + sol.w_minus
    v = (w > 1e-9).astype(float)
    wp = np.where(v > 0, sol.w_plus, 0.0)
    wm = np.where(v > 0, sol.w_minus, 0.0)
    return ClassifierSolution(wp, wm, sol.b, sol.xi.copy(), sol.z.copy(), v,
                              objective_value(wp, wm, sol.xi, sol.z, C))


@dataclass
class FitResult:
    solution: ClassifierSolution
    status: str
    seconds: float
    gap: float | None = None
    nodes: int | None = None
    initial_objective: float | None = None


def fit_model(inst: SvmInstance, C: float, B: int, solver: str = "daks",
              params: DaksParams = DaksParams(), limits: SolveLimits = DESK_EXACT_LIMITS,
              variant: int | None = None) -> FitResult:
    """Train one classifier.

    ``exact`` runs the big-M pipeline and branch and bound (warm-started with
    the pipeline's solution), ``daks`` the kernel search, ``svm-l1`` the plain
    l1-norm SVM (no budget, no ramp loss) as a baseline.
    """
    start = time.perf_counter()
    if solver == "svm-l1":
        sol = svm_l1(inst, C)
        return FitResult(sol, "Optimal", time.perf_counter() - start)
    hp = HyperParams(C, B)
    if solver == "exact":
        a1 = run_algorithm1(inst, hp, variant)
        prob = build_rlfs(inst, hp, a1.bounds)
        res = solve_milp(prob, limits, warm_start=prob.layout.from_solution(a1.solution))
        sol = prob.layout.to_solution(res.x) if res.has_incumbent else a1.solution
        return FitResult(canonical(sol, C), res.status.value, time.perf_counter() - start,
                         res.gap, res.nodes, a1.solution.objective)
    if solver == "daks":
        if variant is not None and params.variant is None:
            params = DaksParams(**{**params.__dict__, "variant": variant})
        res = run_daks(inst, hp, params)
        return FitResult(canonical(res.solution, C), res.stop_reason, time.perf_counter() - start,
                         initial_objective=res.initial.objective)
    raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


@dataclass
class CellResult:
    C: float
    B: int
    folds: list[dict] = field(default_factory=list)

    @property
    def completed(self) -> list[dict]:
        return [f for f in self.folds if f["status"] != "failed"]

    def summary(self) -> dict:
        done = self.completed
        aucs = [f["AUC"] for f in done if f["AUC"] is not None]
        # fsum is exactly rounded, so the mean does not depend on the fold order
        mean = (lambda v: math.fsum(v) / len(v) if v else None)
        return {
            "C": self.C,
            "B": self.B,
            "folds_completed": len(done),
            "incomplete": len(done) < len(self.folds),
            "ACC": mean([f["ACC"] for f in done]),
            "AUC": mean(aucs),
            "av_features": mean([f["selected"] for f in done]),
            "time": mean([f["seconds"] for f in done]),
        }


@dataclass
class CvReport:
    cells: list[CellResult]
    meta: dict

    def best(self, tie_break: str = "time") -> dict | None:
        """Highest mean ACC, then AUC, then least mean time.

        ``tie_break="features"`` replaces the time criterion by the smaller
        mean feature count, then the grid order, which keeps the choice
        independent of wall-clock noise.
        """
        rows = [(i, c.summary()) for i, c in enumerate(self.cells)]
        rows = [(i, s) for i, s in rows if s["ACC"] is not None]
        if not rows:
            return None
        if tie_break == "time":
            key = (lambda r: (-r[1]["ACC"], -(r[1]["AUC"] or 0.0), r[1]["time"], r[0]))
        elif tie_break == "features":
            key = (lambda r: (-r[1]["ACC"], -(r[1]["AUC"] or 0.0), r[1]["av_features"], r[0]))
        else:
            raise ValueError("tie_break must be 'time' or 'features'")
        return min(rows, key=key)[1]

    def to_dict(self, timings: bool = True, tie_break: str = "time") -> dict:
        cells = []
        for c in self.cells:
            s = c.summary()
            folds = [dict(f) for f in c.folds]
            if not timings:
                s.pop("time")
                for f in folds:
                    f.pop("seconds", None)
            cells.append({**s, "folds": folds})
        best = self.best(tie_break)
        if best is not None and not timings:
            best = {k: v for k, v in best.items() if k != "time"}
        return {"meta": self.meta, "cells": cells, "best": best, "best_rule": f"ACC, AUC, {tie_break}"}

    def to_json(self, timings: bool = True, tie_break: str = "time") -> str:
        return json.dumps(self.to_dict(timings, tie_break), indent=2, sort_keys=True) + "\n"

    def to_csv(self, form: str) -> str:
        """Rows ``Form., B, C, Time, Av. F, ACC, AUC`` (percentages for ACC/AUC)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Form.", "B", "C", "Time", "Av. F", "ACC", "AUC"])
        for c in self.cells:
            s = c.summary()
            pct = (lambda t: "" if t is None else f"{100 * t:.2f}%")
            w.writerow([form, s["B"], s["C"], "" if s["time"] is None else f"{s['time']:.2f}",
                        "" if s["av_features"] is None else f"{s['av_features']:.2f}",
                        pct(s["ACC"]), pct(s["AUC"])])
        return buf.getvalue()


def _perturb(train: Dataset, perturbation: str, fraction: float, seed: int,
             perturb_C: float) -> Dataset:
    if perturbation == "none":
        return train
    if perturbation == "label-noise":
        return inject_label_noise(train, fraction, seed)
    if perturbation == "svm-outliers":
        return inject_svm_outliers(train, fraction, perturb_C, seed)
    raise ValueError(f"unknown perturbation {perturbation!r}; expected one of {PERTURBATIONS}")


def _run_fold(job: dict) -> dict:
    ds: Dataset = job["ds"]
    train_idx, test_idx = job["train"], job["test"]
    # the test fold stays a plain array pair: it may hold a single class
    train = ds.subset(train_idx)
    X_te, y_te = ds.X[test_idx], ds.y[test_idx]
    test_sum = array_checksum(X_te, y_te)
    if job["scale"]:
        train, _, scaling = scale_features(train)
        X_te = scaling.apply(X_te)
    train = _perturb(train, job["perturbation"], job["fraction"], job["perturb_seed"], job["perturb_C"])
    out = {"fold": job["fold"], "test_sha256": test_sum}
    try:
        fit = fit_model(train.inst, job["C"], min(job["B"], ds.d), job["solver"], job["params"],
                        job["limits"], job["variant"])
    except Exception as exc:  # a failed fold is recorded, the others go on
        out.update(status="failed", error=f"{type(exc).__name__}: {exc}", ACC=None, AUC=None,
                   selected=None, seconds=None)
        return out
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedAUC)
        m = compute_metrics(predict(fit.solution, X_te), y_te)
    selected = int(np.sum(fit.solution.v > 0.5)) if job["solver"] != "svm-l1" else \
        int(np.sum(np.abs(fit.solution.w) > 1e-9))
    out.update(status=fit.status, ACC=m.ACC, AUC=m.AUC, TP=m.TP, TN=m.TN, FP=m.FP, FN=m.FN,
               selected=selected, objective=round(fit.solution.objective, 9), seconds=fit.seconds)
    return out


def run_tfcv(ds: Dataset, C_grid: Sequence[float], B_grid: Sequence[int], perturbation: str = "none",
             solver: str = "daks", params: DaksParams = DaksParams(), seed: int = 0,
             fraction: float = 0.05, scale: bool = True, limits: SolveLimits = DESK_EXACT_LIMITS,
             variant: int | None = None, workers: int = 1, perturb_C: float = 1.0,
             folds: int = 10) -> CvReport:
    """Ten-fold cross-validation over a ``(C, B)`` grid.

    Each training fold is scaled (the fitted scaling is applied to the test
    fold), then perturbed, then used for fitting; the test fold is never
    touched.  The perturbation of fold ``k`` is seeded with ``seed * 1000 + k``
    and does not depend on the grid cell, so all cells see the same data.
    """
    if not C_grid or not B_grid:
        raise ValueError("C_grid and B_grid must be non-empty")
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    if perturbation not in PERTURBATIONS:
        raise ValueError(f"unknown perturbation {perturbation!r}")
    plan = stratified_folds(ds, seed, folds)
    jobs = []
    for C in C_grid:
        for B in B_grid:
            for k in range(folds):
                tr, te = plan.split(k)
                jobs.append({"ds": ds, "train": tr, "test": te, "fold": k, "C": float(C), "B": int(B),
                             "solver": solver, "params": params, "limits": limits, "variant": variant,
                             "scale": scale, "perturbation": perturbation, "fraction": fraction,
                             "perturb_seed": seed * 1000 + k, "perturb_C": perturb_C})
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_fold, jobs))
    else:
        results = [_run_fold(j) for j in jobs]
    cells: dict[tuple, CellResult] = {}
    for j, r in zip(jobs, results):
        cells.setdefault((j["C"], j["B"]), CellResult(j["C"], j["B"])).folds.append(r)
    meta = {
        "dataset": ds.manifest(),
        "seed": seed,
        "solver": solver,
        "perturbation": perturbation,
        "fraction": fraction,
        "perturb_C": perturb_C,
        "scaling": "minmax-train" if scale else "none",
        "variant": variant,
        "daks_params": params.to_dict(),
        "exact_limits": asdict(limits),
        "folds": folds,
        "C_grid": [float(c) for c in C_grid],
        "B_grid": [int(b) for b in B_grid],
    }
    return CvReport(list(cells.values()), meta)


def validate_heuristic(ds: Dataset, C_grid: Sequence[float], B: int,
                       limits: SolveLimits = DESK_EXACT_LIMITS, params: DaksParams = DaksParams(),
                       seed: int = 0, scale: bool = True, variant: int | None = None) -> list[dict]:
    """Exact versus heuristic objective on the same data, one row per ``C``.

    ``%BS = 100 (BS_h - BS_e) / BS_e``; ``None`` when ``BS_e = 0``.  ``seed``
    is recorded only: both arms are deterministic.
    """
    data = scale_features(ds)[0] if scale else ds
    rows = []
    for C in C_grid:
        e = fit_model(data.inst, float(C), B, "exact", params, limits, variant)
        h = fit_model(data.inst, float(C), B, "daks", params, limits, variant)
        bs_e, bs_h = e.solution.objective, h.solution.objective
        rows.append({
            "C": float(C), "B": int(B),
            "t_e": e.seconds, "GAP": e.gap, "status_e": e.status, "BS_e": bs_e,
            "t_h": h.seconds, "BS_h": bs_h,
            "pct_BS": None if bs_e == 0 else 100.0 * (bs_h - bs_e) / bs_e,
            "seed": seed,
        })
    return rows


def validation_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["C", "B", "t_e", "GAP", "t_h", "%BS", "BS_e", "BS_h"])
    for r in rows:
        w.writerow([r["C"], r["B"], f"{r['t_e']:.2f}", f"{100 * r['GAP']:.2f}%" if r["GAP"] is not None else "",
                    f"{r['t_h']:.2f}", "" if r["pct_BS"] is None else f"{round(r['pct_BS'], 2) + 0.0:.2f}%",
                    f"{r['BS_e']:.6g}", f"{r['BS_h']:.6g}"])
    return buf.getvalue()


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def write_text(path, text: str) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
