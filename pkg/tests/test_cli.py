import json
import subprocess
import sys

import numpy as np
import pytest

from rampfs.cli import main


@pytest.fixture
def csv_path(tmp_path):
    r = np.random.default_rng(0)
    y = np.where(np.arange(30) % 2 == 0, 1, -1)
    X = r.random((30, 4)) + 0.4 * y[:, None] * np.array([1.0, 0.5, 0.0, 0.0])
    p = tmp_path / "toy.csv"
    p.write_text("".join(",".join(f"{v:.6f}" for v in row) + f",{lab}\n" for row, lab in zip(X, y)))
    return p


def run(args, capsys):
    code = main([str(a) for a in args])
    return code, capsys.readouterr()


def error_of(captured):
    return json.loads(captured.err.strip().splitlines()[-1])


def test_missing_dataset_exit_2(tmp_path, capsys):
    code, cap = run(["cv", "--data", tmp_path / "absent.csv", "--out-dir", tmp_path / "o"], capsys)
    assert code == 2
    err = error_of(cap)
    assert err["exit_code"] == 2 and "absent.csv" in err["message"]


def test_usage_errors_are_json(tmp_path, capsys):
    code, cap = run(["cv", "--data", "x.csv", "--solver", "bogus"], capsys)
    assert code == 2 and error_of(cap)["error"] == "ConfigError"
    code, cap = run(["cv"], capsys)
    assert code == 2 and "dataset" in error_of(cap)["message"]


def test_invalid_budget_exit_2(csv_path, tmp_path, capsys):
    code, cap = run(["train", "--data", csv_path, "--B", "9", "--out-dir", tmp_path / "o"], capsys)
    assert code == 2 and error_of(cap)["exit_code"] == 2


def test_unknown_config_key(csv_path, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"data": str(csv_path), "colour": "red"}))
    code, cap = run(["train", "--config", cfg], capsys)
    assert code == 2 and "colour" in error_of(cap)["message"]


def test_train_writes_model(csv_path, tmp_path, capsys):
    out = tmp_path / "o"
    code, _ = run(["train", "--data", csv_path, "--C", "1", "--B", "2", "--solver", "daks",
                   "--time-limit", "10", "--out-dir", out], capsys)
    assert code == 0
    model = json.loads((out / "model.json").read_text())
    assert model["B"] == 2 and sum(model["model"]["v"]) <= 2
    assert model["meta"]["seed"] == 0 and model["meta"]["dataset"]["sha256"]
    assert "seconds" in json.loads((out / "timings.json").read_text())


def test_config_file_with_flag_override(csv_path, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"data": str(csv_path), "C": 5.0, "B": 1, "solver": "svm-l1"}))
    out = tmp_path / "o"
    code, _ = run(["train", "--config", cfg, "--C", "0.5", "--out-dir", out], capsys)
    assert code == 0
    model = json.loads((out / "model.json").read_text())
    assert model["C"] == 0.5 and model["B"] == 1
    assert model["meta"]["config"]["solver"] == "svm-l1"


def test_cv_same_seed_identical_report(csv_path, tmp_path, capsys):
    texts = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, _ = run(["cv", "--data", csv_path, "--C", "0.1,1", "--B", "1,2", "--solver", "svm-l1",
                       "--perturb", "label-noise", "--seed", "3", "--workers", "1", "--out-dir", out],
                      capsys)
        assert code == 0
        texts.append((out / "report.json").read_bytes())
        assert (out / "table.csv").read_text().startswith("Form.,B,C,Time,Av. F,ACC,AUC")
    assert texts[0] == texts[1]
    rep = json.loads(texts[0])
    assert len(rep["cells"]) == 4 and rep["best"] is not None


def test_tighten_and_export(csv_path, tmp_path, capsys):
    out = tmp_path / "o"
    code, _ = run(["tighten", "--data", csv_path, "--C", "1", "--B", "2", "--out-dir", out], capsys)
    assert code == 0
    doc = json.loads((out / "bounds.json").read_text())
    assert doc["iterations"] >= 1 and len(doc["bounds"]["M"]) == 30
    assert (out / "tighten_trace.jsonl").read_text().strip()
    code, _ = run(["export-lp", "--data", csv_path, "--C", "1", "--B", "2", "--out-dir", out], capsys)
    assert code == 0
    text = (out / "model.lp").read_text()
    assert "budget" in text and "Binar" in text


def test_validate_outputs(csv_path, tmp_path, capsys):
    out = tmp_path / "o"
    code, _ = run(["validate", "--data", csv_path, "--C", "0.01", "--B", "1", "--time-limit", "10",
                   "--out-dir", out], capsys)
    assert code == 0
    rows = json.loads((out / "validation.json").read_text())["rows"]
    assert rows[0]["pct_BS"] == pytest.approx(0.0, abs=1e-4)
    assert (out / "validation.csv").read_text().startswith("C,B,t_e,GAP,t_h,%BS,BS_e,BS_h")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rampfs", "train", "--data", str(tmp_path / "no.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr)["exit_code"] == 2
