"""Ramp-loss SVM with a feature budget: exact MILP and kernel-search heuristic."""

__version__ = "0.1.0"

from .lp import LinearProgram, LpSolution, LpStatus, NumericalFailure, Tolerances, solve_lp
from .milp import MilpProblem, MilpSolution, MilpStatus, SolveLimits, solve_milp
from .formulations import (
    BigMBounds,
    ClassifierSolution,
    HyperParams,
    SvmInstance,
    build_rlfs,
    build_svm_l1,
    objective_value,
)
from .bigm import StopRule, run_algorithm1, svm_l1
from .daks import DaksParams, run_daks
from .data import Dataset, load_csv, load_wdbc, scale_features, stratified_folds
from .evaluation import Metrics, compute_metrics, fit_model, predict, run_tfcv, validate_heuristic

__all__ = [
    "LinearProgram", "LpSolution", "LpStatus", "NumericalFailure", "Tolerances", "solve_lp",
    "MilpProblem", "MilpSolution", "MilpStatus", "SolveLimits", "solve_milp",
    "BigMBounds", "ClassifierSolution", "HyperParams", "SvmInstance", "build_rlfs",
    "build_svm_l1", "objective_value", "StopRule", "run_algorithm1", "svm_l1",
    "DaksParams", "run_daks", "Dataset", "load_csv", "load_wdbc", "scale_features",
    "stratified_folds", "Metrics", "compute_metrics", "fit_model", "predict", "run_tfcv",
    "validate_heuristic",
]
