"""Command-line interface: ``rampfs {train,cv,validate,tighten,export-lp}``.

Options come from an optional JSON config file (``--config``) and flags; a
flag given on the command line wins over the same key in the file.  Errors
are printed to stderr as one JSON object; the exit code is 2 for bad
configuration or input and 1 for solver failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .bigm import StopRule, default_variant, run_algorithm1
from .daks import DaksParams
from .data import Dataset, LabelError, ParseError, load_csv, load_wdbc, scale_features
from .evaluation import (
    DESK_EXACT_LIMITS,
    compute_metrics,
    default_workers,
    fit_model,
    predict,
    run_tfcv,
    validate_heuristic,
    validation_csv,
    write_text,
)
from .formulations import HyperParams, build_rlfs
from .lp import NumericalFailure, Tolerances, write_lp_file
from .milp import SolveLimits

COMMANDS = ("train", "cv", "validate", "tighten", "export-lp")

# documented config keys and their defaults
DEFAULTS = {
    "data": None,
    "label_col": -1,
    "C": [1.0],
    "B": None,
    "solver": "daks",
    "variant": None,
    "perturb": "none",
    "fraction": 0.05,
    "seed": 0,
    "time_limit": None,
    "out_dir": "out",
    "scale": True,
    "workers": None,
    "tighten": True,
    "daks": {},
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors through the JSON error path
        raise ConfigError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str):
    if text.strip() == "auto":
        return "auto"
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rampfs", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"rampfs {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with any of the documented keys")
        s.add_argument("--data", help="CSV path, or 'wdbc' for the bundled breast-cancer data")
        s.add_argument("--label-col", type=int, dest="label_col")
        s.add_argument("--C", type=_floats, help="value, or comma-separated grid for cv/validate")
        s.add_argument("--B", type=_ints, help="budget; comma-separated grid or 'auto' for cv")
        s.add_argument("--solver", choices=("exact", "daks", "svm-l1"))
        s.add_argument("--variant", type=int, choices=(1, 2))
        s.add_argument("--perturb", choices=("none", "label-noise", "svm-outliers"))
        s.add_argument("--fraction", type=float)
        s.add_argument("--seed", type=int)
        s.add_argument("--time-limit", type=float, dest="time_limit",
                       help="seconds per exact solve and per DAKS sub-problem")
        s.add_argument("--out-dir", dest="out_dir")
        s.add_argument("--workers", type=int, help="parallel folds for cv")
        s.add_argument("--no-scale", dest="scale", action="store_false", default=None)
        s.add_argument("--no-tighten", dest="tighten", action="store_false", default=None,
                       help="export-lp: initial big-M values only")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if isinstance(cfg["C"], (int, float)):
        cfg["C"] = [float(cfg["C"])]
    if isinstance(cfg["B"], int):
        cfg["B"] = [cfg["B"]]
    if cfg["data"] is None:
        raise ConfigError("no dataset given (--data)")
    if any(c < 0 for c in cfg["C"]) or not cfg["C"]:
        raise ConfigError("C must be non-empty and non-negative")
    if not 0 <= cfg["fraction"] <= 1:
        raise ConfigError("fraction must lie in [0, 1]")
    known = {f.name for f in fields(DaksParams)}
    bad = set(cfg["daks"]) - known
    if bad:
        raise ConfigError(f"unknown DAKS parameters: {sorted(bad)}")
    return cfg


def _daks_params(cfg: dict) -> DaksParams:
    kw = dict(cfg["daks"])
    if "bigm_stop" in kw and isinstance(kw["bigm_stop"], dict):
        kw["bigm_stop"] = StopRule(**kw["bigm_stop"])
    if cfg["time_limit"] is not None:
        kw.setdefault("t_limit", cfg["time_limit"])
    if cfg["variant"] is not None:
        kw.setdefault("variant", cfg["variant"])
    try:
        return DaksParams(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid DAKS parameters: {exc}") from None


def _exact_limits(cfg: dict) -> SolveLimits:
    if cfg["time_limit"] is None:
        return DESK_EXACT_LIMITS
    return SolveLimits(t_limit=cfg["time_limit"])


def _load(cfg: dict) -> Dataset:
    if cfg["data"] == "wdbc":
        return load_wdbc()
    path = Path(cfg["data"])
    if not path.is_file():
        raise ConfigError(f"dataset not found: {path}")
    return load_csv(path, label_col=cfg["label_col"])


def _single(cfg: dict, key: str, ds: Dataset):
    vals = cfg[key]
    if vals is None and key == "B":
        return ds.d
    if vals == "auto" or len(vals) != 1:
        raise ConfigError(f"this command takes a single {key} value")
    return vals[0]


def metadata(cfg: dict, command: str, ds: Dataset) -> dict:
    return {
        "tool": "rampfs",
        "version": __version__,
        "command": command,
        "dataset": ds.manifest(),
        "seed": cfg["seed"],
        "scaling": "minmax" if cfg["scale"] else "none",
        "variant": cfg["variant"] if cfg["variant"] is not None else default_variant(ds.n),
        "solver": cfg["solver"],
        "daks_params": _daks_params(cfg).to_dict(),
        "exact_limits": asdict(_exact_limits(cfg)),
        "tolerances": asdict(Tolerances()),
        "config": {k: cfg[k] for k in sorted(cfg) if k != "out_dir"},
    }


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_train(cfg: dict) -> int:
    ds = _load(cfg)
    data = scale_features(ds)[0] if cfg["scale"] else ds
    C, B = _single(cfg, "C", ds), _single(cfg, "B", ds)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    fit = fit_model(data.inst, C, B, cfg["solver"], _daks_params(cfg), _exact_limits(cfg),
                    cfg["variant"])
    with np.errstate(all="ignore"):
        m = compute_metrics(predict(fit.solution, data.X), data.y)
    model = {"meta": metadata(cfg, "train", ds), "C": C, "B": B, "status": fit.status,
             "model": fit.solution.to_dict(), "training_metrics": m.to_dict()}
    write_text(out / "model.json", _dump(model))
    write_text(out / "timings.json", _dump({"seconds": fit.seconds}))
    return 0


def cmd_cv(cfg: dict) -> int:
    ds = _load(cfg)
    B_grid = cfg["B"]
    budget_info = None
    if B_grid is None:
        B_grid = [ds.d]
    elif B_grid == "auto":
        from .data import budget_grid
        from .evaluation import fit_model as _fit

        params = _daks_params(cfg)
        B_grid, budget_info = budget_grid(
            ds, cfg["C"], cfg["seed"],
            fit=lambda inst, C, B: _fit(inst, C, B, cfg["solver"], params, _exact_limits(cfg)).solution,
            scale=cfg["scale"])
    workers = cfg["workers"] or default_workers()
    rep = run_tfcv(ds, cfg["C"], B_grid, cfg["perturb"], cfg["solver"], _daks_params(cfg),
                   cfg["seed"], cfg["fraction"], cfg["scale"], _exact_limits(cfg), cfg["variant"],
                   workers)
    rep.meta["run"] = metadata(cfg, "cv", ds)
    if budget_info is not None:
        rep.meta["budget_grid"] = budget_info
    out = Path(cfg["out_dir"])
    write_text(out / "report.json", rep.to_json(timings=False, tie_break="features"))
    write_text(out / "timings.json", _dump([{"C": c.C, "B": c.B, "time": c.summary()["time"]}
                                            for c in rep.cells]))
    write_text(out / "table.csv", rep.to_csv("RL-FS-M" if cfg["solver"] != "svm-l1" else "SVM-l1"))
    return 0


def cmd_validate(cfg: dict) -> int:
    ds = _load(cfg)
    B = _single(cfg, "B", ds)
    rows = validate_heuristic(ds, cfg["C"], B, _exact_limits(cfg), _daks_params(cfg), cfg["seed"],
                              cfg["scale"], cfg["variant"])
    out = Path(cfg["out_dir"])
    stable = [{k: v for k, v in r.items() if k not in ("t_e", "t_h")} for r in rows]
    write_text(out / "validation.json", _dump({"meta": metadata(cfg, "validate", ds), "rows": stable}))
    write_text(out / "validation.csv", validation_csv(rows))
    return 0


def _tightened(cfg: dict, ds: Dataset, trace=None):
    data = scale_features(ds)[0] if cfg["scale"] else ds
    C, B = _single(cfg, "C", ds), _single(cfg, "B", ds)
    hp = HyperParams(C, B)
    hp.check(data.inst)
    params = _daks_params(cfg)
    return data, hp, run_algorithm1(data.inst, hp, cfg["variant"], params.bigm_stop, trace=trace)


def cmd_tighten(cfg: dict) -> int:
    ds = _load(cfg)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    trace: list[dict] = []
    _, hp, a1 = _tightened(cfg, ds, trace)
    doc = {"meta": metadata(cfg, "tighten", ds), "C": hp.C, "B": hp.B, "iterations": a1.iterations,
           "bounds": a1.bounds.to_dict(), "initial_solution": a1.solution.to_dict()}
    write_text(out / "bounds.json", _dump(doc))
    write_text(out / "tighten_trace.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in trace))
    return 0


def cmd_export_lp(cfg: dict) -> int:
    from .bigm import init_bounds, initial_solution

    ds = _load(cfg)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["tighten"]:
        data, hp, a1 = _tightened(cfg, ds)
        bounds = a1.bounds
    else:
        data = scale_features(ds)[0] if cfg["scale"] else ds
        hp = HyperParams(_single(cfg, "C", ds), _single(cfg, "B", ds))
        hp.check(data.inst)
        sol, UB, _ = initial_solution(data.inst, hp)
        bounds = init_bounds(data.inst, UB, sol)
    prob = build_rlfs(data.inst, hp, bounds)
    write_lp_file(prob.lp, out / "model.lp", binaries=prob.binaries)
    return 0


HANDLERS = {"train": cmd_train, "cv": cmd_cv, "validate": cmd_validate, "tighten": cmd_tighten,
            "export-lp": cmd_export_lp}


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, ParseError, LabelError, FileNotFoundError, argparse.ArgumentTypeError) as exc:
        return _fail(2, exc)
    except ValueError as exc:  # invalid parameter combinations, e.g. B > d
        return _fail(2, exc)
    except (NumericalFailure, RuntimeError) as exc:
        return _fail(1, exc)


if __name__ == "__main__":
    sys.exit(main())
