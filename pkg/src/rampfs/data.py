"""Dataset loading, scaling, folds and training-set perturbations."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold, StratifiedShuffleSplit

from .formulations import SvmInstance

__all__ = [
    "ParseError",
    "LabelError",
    "Dataset",
    "array_checksum",
    "ScalingParams",
    "FoldPlan",
    "load_csv",
    "load_wdbc",
    "scale_features",
    "canonical_order",
    "stratified_folds",
    "inject_label_noise",
    "inject_svm_outliers",
    "grid_from_bmax",
    "budget_grid",
    "stratified_subsample",
]


def array_checksum(X: np.ndarray, y: np.ndarray) -> str:
    """SHA-256 of the little-endian float64 bytes of ``X`` then ``y``."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(y, dtype="<f8").tobytes())
    return h.hexdigest()


class ParseError(ValueError):
    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        loc = "" if row is None else f" (row {row}" + ("" if column is None else f", column {column}") + ")"
        super().__init__(message + loc)
        self.row, self.column = row, column


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    inst: SvmInstance
    feature_names: tuple[str, ...] | None = None
    provenance: str = ""

    @property
    def X(self) -> np.ndarray:
        return self.inst.X

    @property
    def y(self) -> np.ndarray:
        return self.inst.y

    @property
    def n(self) -> int:
        return self.inst.n

    @property
    def d(self) -> int:
        return self.inst.d

    def subset(self, idx, tag: str | None = None) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(SvmInstance(self.X[idx], self.y[idx]), self.feature_names,
                       self.provenance if tag is None else tag)

    def with_labels(self, y: np.ndarray, tag: str) -> "Dataset":
        return Dataset(SvmInstance(self.X, y), self.feature_names, f"{self.provenance}|{tag}")

    def checksum(self) -> str:
        return array_checksum(self.X, self.y)

    def manifest(self) -> dict:
        return {
            "provenance": self.provenance,
            "n": self.n,
            "d": self.d,
            "positives": int(np.sum(self.y == 1)),
            "negatives": int(np.sum(self.y == -1)),
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "sha256": self.checksum(),
        }


def _map_labels(raw: np.ndarray) -> np.ndarray:
    vals = set(np.unique(raw).tolist())
    if vals <= {-1.0, 1.0}:
        y = raw.astype(float)
    elif vals <= {0.0, 1.0}:
        y = np.where(raw == 1.0, 1.0, -1.0)
    else:
        raise LabelError(f"labels must be in {{-1, +1}} or {{0, 1}}, got {sorted(vals)}")
    if not ((y == 1).any() and (y == -1).any()):
        raise LabelError("only one class present")
    return y


def load_csv(path, label_col: int = -1, header: bool | None = None,
             delimiter: str = ",") -> Dataset:
    """Read a numeric CSV file with one label column.

    Parameters
    ----------
    label_col : int
        Column holding the label (negative values count from the end).
    header : bool, optional
        Whether the first row holds names; detected from its content if omitted.

    Raises
    ------
    ParseError
        Non-numeric cell or ragged row, with its 1-based location.
    LabelError
        Labels outside {-1, +1} / {0, 1}, or a single class.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file")
    if header is None:
        try:
            [float(c) for c in rows[0]]
            header = False
        except ValueError:
            header = True
    names = [c.strip() for c in rows[0]] if header else None
    body = rows[1:] if header else rows
    width = len(rows[0])
    if not -width <= label_col < width:
        raise ParseError(f"label column {label_col} out of range for {width} columns")
    lc = label_col % width
    data = np.empty((len(body), width))
    for r, row in enumerate(body):
        line = r + (2 if header else 1)
        if len(row) != width:
            raise ParseError(f"expected {width} cells, found {len(row)}", line)
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", line, c + 1) from None
    if not np.isfinite(data).all():
        r, c = np.argwhere(~np.isfinite(data))[0]
        raise ParseError("NaN or infinite value", int(r) + (2 if header else 1), int(c) + 1)
    y = _map_labels(data[:, lc])
    X = np.delete(data, lc, axis=1)
    if names is not None:
        names = tuple(n for j, n in enumerate(names) if j != lc)
    return Dataset(SvmInstance(X, y), names, f"csv:{path.name}")


def load_wdbc() -> Dataset:
    """Wisconsin diagnostic breast cancer data (569 x 30) bundled with scikit-learn.

    Malignant cases are the positive class.
    """
    from sklearn.datasets import load_breast_cancer

    raw = load_breast_cancer()
    y = np.where(raw.target == 0, 1.0, -1.0)  # target 0 = malignant
    return Dataset(SvmInstance(raw.data.astype(float), y), tuple(raw.feature_names), "wdbc")


@dataclass(frozen=True)
class ScalingParams:
    low: np.ndarray
    span: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.span > 0, (X - self.low) / np.where(self.span > 0, self.span, 1.0), 0.0)


def scale_features(train: Dataset, test: Dataset | None = None,
                   ) -> tuple[Dataset, Dataset | None, ScalingParams]:
    """Min-max scaling fitted on ``train``; constant features map to 0.

    Test values outside the training range are not clipped.
    """
    low = train.X.min(axis=0)
    span = train.X.max(axis=0) - low
    params = ScalingParams(low, span)
    tr = Dataset(SvmInstance(params.apply(train.X), train.y), train.feature_names, train.provenance)
    te = None
    if test is not None:
        te = Dataset(SvmInstance(params.apply(test.X), test.y), test.feature_names, test.provenance)
    return tr, te, params


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[np.ndarray, ...]
    seed: int

    def split(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """``(train, test)`` indices for fold ``k``."""
        test = self.folds[k]
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != k]))
        return train, test

    def to_dict(self) -> dict:
        return {"seed": self.seed, "folds": [f.tolist() for f in self.folds]}


def canonical_order(ds: Dataset, labels: bool = True) -> np.ndarray:
    """Row indices sorted by content (label, then features).

    Random draws are made on this order, so permuting the rows of a dataset
    permutes the outcome of every seeded operation the same way.  Label
    perturbations sort on the features only, so that applying one twice
    draws the same rows.
    """
    keys = [ds.X[:, k] for k in range(ds.d - 1, -1, -1)] + ([ds.y] if labels else [])
    return np.lexsort(keys)


def stratified_folds(ds: Dataset, seed: int, k: int = 10) -> FoldPlan:
    """Partition the individuals into ``k`` class-stratified folds."""
    order = canonical_order(ds)
    skf = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    folds = tuple(np.sort(order[test]) for _, test in skf.split(ds.X[order], ds.y[order]))
    return FoldPlan(folds, seed)


def inject_label_noise(ds: Dataset, fraction: float, seed: int) -> Dataset:
    """Negate the labels of ``ceil(fraction * n)`` uniformly chosen individuals."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    k = math.ceil(fraction * ds.n - 1e-12)
    if k == 0:
        return ds
    rng = np.random.default_rng(seed)
    idx = canonical_order(ds, labels=False)[rng.choice(ds.n, size=k, replace=False)]
    y = ds.y.copy()
    y[idx] = -y[idx]
    return ds.with_labels(y, f"label-noise:{fraction}:{seed}")


def inject_svm_outliers(ds: Dataset, fraction: float, C: float, seed: int) -> Dataset:
    """Flip the best-classified individuals of each class according to the l1-SVM.

    Within each class individuals are ranked by ``y_i (w . x_i + b)``
    (non-increasing, ties in a seeded random order) and the first
    ``ceil(fraction * class size)`` get their label negated.
    """
    from .bigm import svm_l1

    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    if fraction == 0.0:
        return ds
    sol = svm_l1(ds.inst, C)
    margin = sol.margins(ds.X, ds.y)
    tie = np.empty(ds.n, dtype=int)
    tie[canonical_order(ds, labels=False)] = np.random.default_rng(seed).permutation(ds.n)
    y = ds.y.copy()
    for cls in (1.0, -1.0):
        idx = np.flatnonzero(ds.y == cls)
        k = math.ceil(fraction * idx.size - 1e-12)
        order = idx[np.lexsort((tie[idx], -margin[idx]))]
        y[order[:k]] = -cls
    return ds.with_labels(y, f"svm-outliers:{fraction}:{C}:{seed}")


def stratified_subsample(ds: Dataset, size: int, seed: int) -> Dataset:
    """Class-stratified random subsample of ``size`` individuals."""
    if size >= ds.n:
        return ds
    order = canonical_order(ds)
    sss = StratifiedShuffleSplit(n_splits=1, train_size=size, random_state=seed)
    idx, _ = next(sss.split(ds.X[order], ds.y[order]))
    return ds.subset(np.sort(order[idx]), f"{ds.provenance}|subsample:{size}:{seed}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def grid_from_bmax(bmax: int) -> list[int]:
    """``{1, 2/3, 1/2, 1/3, 1/5} * B_max`` rounded half-up, deduplicated, descending."""
    if bmax < 1:
        raise ValueError("B_max must be >= 1")
    vals = [max(1, _round_half_up(f * bmax)) for f in (1.0, 2.0 / 3.0, 0.5, 1.0 / 3.0, 0.2)]
    return sorted(set(vals), reverse=True)


def budget_grid(ds: Dataset, C_grid: Sequence[float], seed: int,
                fit: Callable[[SvmInstance, float, int], "object"] | None = None,
                samples: int = 10, scale: bool = True) -> tuple[list[int], dict]:
    """Budget grid from the features selected with an inactive budget.

    For each ``C``, the model with ``B = d`` is fitted on ``samples`` random
    stratified 90% subsamples; ``B_max`` is the largest (rounded) mean number
    of selected features over ``C``.

    Parameters
    ----------
    fit : callable, optional
        ``fit(inst, C, B) -> ClassifierSolution``; defaults to the exact solver.

    Returns
    -------
    grid, details
    """
    if fit is None:
        from .evaluation import fit_model

        def fit(inst, C, B):
            return fit_model(inst, C, B, solver="exact")

    order = canonical_order(ds)
    sss = StratifiedShuffleSplit(n_splits=samples, train_size=0.9, random_state=seed)
    splits = [np.sort(order[tr]) for tr, _ in sss.split(ds.X[order], ds.y[order])]
    means = {}
    for C in C_grid:
        counts = []
        for tr in splits:
            sub = ds.subset(tr)
            if scale:
                sub = scale_features(sub)[0]
            sol = fit(sub.inst, float(C), ds.d)
            counts.append(int(np.sum(np.abs(sol.w) > 1e-6)))
        means[float(C)] = float(np.mean(counts))
    bmax = max(1, max(_round_half_up(m) for m in means.values()))
    return grid_from_bmax(bmax), {"mean_selected": means, "B_max": bmax}
