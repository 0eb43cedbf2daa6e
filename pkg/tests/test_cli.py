import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from opbridge.cli import main
from opbridge.config import ConfigError, parse_config


def _write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


@pytest.fixture
def configs(tmp_path):
    return {
        "skew": _write(tmp_path / "skew.json", {"T": 1.0, "A": [[0, 1], [-1, 0]], "Sigma": [[1, 0], [0, 1]]}),
        "diag": _write(tmp_path / "diag.json", {"T": 1.0, "A": [[0.25, 0], [0, 0.75]], "Sigma": [[1, 0], [0, 1]]}),
        "wb": _write(tmp_path / "wb.json", {"T": 1.0, "A": [[1.0]], "Sigma": [[1.0]]}),
        "rot": _write(tmp_path / "rot.json", {"T": 1.0, "A": [[1, 1], [-1, 1]], "Sigma": [[1, 0], [0, 1]]}),
        "eye": _write(tmp_path / "eye.json", {"T": 1.0, "A": [[1, 0], [0, 1]], "Sigma": [[1, 0], [0, 1]]}),
        "bad": _write(tmp_path / "bad.json", '{"T": 1.0, "A": [[1, 0], [0, "x"]], "Sigma": [[1]]}'),
        "broken": _write(tmp_path / "broken.json", '{"T": 1.0,\n "A": [[1]'),
    }


def test_classify_text(configs, capsys):
    assert main(["classify", "--config", configs["skew"]]) == 0
    assert "counterexample-class" in capsys.readouterr().out
    assert main(["classify", "--config", configs["diag"], "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "bridge"


def test_classify_bad_field(configs, capsys):
    assert main(["classify", "--config", configs["bad"]]) == 1
    assert "$.A[1][1]" in capsys.readouterr().err


def test_classify_bad_json(configs, capsys):
    assert main(["classify", "--config", configs["broken"]]) == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_file_and_bad_flags(tmp_path, capsys):
    assert main(["classify", "--config", str(tmp_path / "nope.json")]) == 1
    assert main(["simulate", "--config", "x"]) == 1
    assert main(["frobnicate"]) == 1


@pytest.mark.parametrize(
    "data,where",
    [
        ([], "$"),
        ({"A": [[1]], "Sigma": [[1]]}, "$.T"),
        ({"T": -1, "A": [[1]], "Sigma": [[1]]}, "$.T"),
        ({"T": 1, "A": [[1, 2]], "Sigma": [[1]]}, "$.A"),
        ({"T": 1, "A": [[1]], "Sigma": [[1], [2]]}, "$.Sigma"),
        ({"T": 1, "A": [[1, 0], [0]], "Sigma": [[1], [1]]}, "$.A[1]"),
        ({"T": 1, "A": [[1]], "Sigma": [[True]]}, "$.Sigma[0][0]"),
    ],
)
def test_config_errors(data, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    assert str(exc.value).startswith(where)


def test_simulate_deterministic(configs, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["simulate", "--config", configs["diag"], "--paths", "10", "--seed", "42", "--out", str(out)]) == 0
        outs.append(out)
    assert (outs[0] / "paths.csv").read_bytes() == (outs[1] / "paths.csv").read_bytes()
    m0 = json.loads((outs[0] / "manifest.json").read_text())
    m1 = json.loads((outs[1] / "manifest.json").read_text())
    for key in ("started", "finished"):
        m0.pop(key), m1.pop(key)
    assert m0 == m1
    assert m0["outputs"] == ["paths.csv"] and m0["master_seed"] == 42
    assert set(os.listdir(outs[0])) == {"paths.csv", "manifest.json"}


def test_simulate_pin_terminal(configs, tmp_path):
    out = tmp_path / "pin"
    assert main(["simulate", "--config", configs["diag"], "--paths", "3", "--pin-terminal", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO((out / "paths.csv").read_text())))
    last = [r for r in rows if r["path"] == "0"][-1]
    assert float(last["t"]) == 1.0 and float(last["x1"]) == 0.0 and float(last["x2"]) == 0.0


def test_simulate_pin_refused(configs, tmp_path, capsys):
    out = tmp_path / "skewpin"
    assert main(["simulate", "--config", configs["skew"], "--paths", "3", "--pin-terminal", "--out", str(out)]) == 1
    assert "ReSpec" in capsys.readouterr().err
    assert not (out / "manifest.json").exists() and not (out / "paths.csv").exists()


def test_simulate_scheme_conflict(configs, tmp_path):
    assert main(["simulate", "--config", configs["diag"], "--scheme", "euler", "--pin-terminal", "--out", str(tmp_path / "c")]) == 1
    assert main(["simulate", "--config", configs["diag"], "--grid", "uniform:10:1.5", "--out", str(tmp_path / "g")]) == 1
    assert main(["simulate", "--config", configs["diag"], "--grid", "bogus", "--out", str(tmp_path / "g")]) == 1


def test_simulate_euler_rows(configs, tmp_path):
    out = tmp_path / "eu"
    args = ["simulate", "--config", configs["wb"], "--scheme", "euler", "--grid", "uniform:1000:0.9"]
    assert main(args + ["--paths", "2", "--out", str(out)]) == 0
    lines = (out / "paths.csv").read_text().splitlines()
    assert lines[0] == "path,t,x1"
    assert len(lines) - 1 == 2 * 1001
    assert float(lines[1001].split(",")[1]) == pytest.approx(0.9)


def test_simulate_json_format(configs, tmp_path):
    out = tmp_path / "js"
    assert main(["simulate", "--config", configs["wb"], "--paths", "2", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads((out / "paths.json").read_text())
    assert np.asarray(doc["paths"]).shape[0] == 2


def test_analyze_wiener_covariance(configs, tmp_path):
    out = tmp_path / "an"
    assert main(["analyze", "--config", configs["wb"], "--analytic", "--report", "covariance", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO((out / "covariance.csv").read_text())))
    t = np.array([float(r["t"]) for r in rows])
    u = np.array([float(r["U11"]) for r in rows])
    np.testing.assert_allclose(u, t * (1 - t), atol=1e-12)
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "pass"


def test_analyze_against_normal_pair(configs, tmp_path):
    out = tmp_path / "cmp"
    assert main(["analyze", "--config", configs["rot"], "--against", configs["eye"], "--report", "covariance", "--out", str(out)]) == 0
    assert json.loads((out / "comparison.json").read_text())["verdict"] == "same-law-despite-different-A"


def test_analyze_decay(configs, tmp_path):
    out = tmp_path / "dec"
    assert main(["analyze", "--config", configs["diag"], "--report", "decay", "--out", str(out)]) == 0
    dec = json.loads((out / "decay.json").read_text())
    est = [r["estimated_exponent"] for r in dec]
    assert est == pytest.approx([0.5, 1.0], abs=0.1)


def test_analyze_ensemble(configs, tmp_path):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", configs["wb"], "--paths", "3000", "--seed", "1", "--out", str(sim)]) == 0
    out = tmp_path / "conv"
    code = main(["analyze", "--config", configs["wb"], "--ensemble", str(sim), "--report", "convergence", "--out", str(out)])
    assert code == 0
    assert json.loads((out / "convergence.json").read_text())["converged"] is True
    # an ensemble from another model is rejected
    assert main(["analyze", "--config", configs["diag"], "--ensemble", str(sim), "--out", str(tmp_path / "x")]) == 1


def test_analyze_failed_check_exit_2(configs, tmp_path):
    sim = tmp_path / "few"
    assert main(["simulate", "--config", configs["wb"], "--paths", "1", "--seed", "3", "--out", str(sim)]) == 0
    # one path is far too noisy for a strictly decreasing tail
    out = tmp_path / "fail"
    code = main(["analyze", "--config", configs["wb"], "--ensemble", str(sim), "--report", "convergence", "--out", str(out)])
    assert json.loads((out / "convergence.json").read_text())["passed"] is False
    assert code == 2
    assert json.loads((out / "report.json").read_text())["status"] == "fail"


def test_decompose_and_compare(configs, tmp_path, capsys):
    assert main(["decompose", "--config", configs["diag"]]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["block_dims"] == [1, 1]
    assert main(["compare", "--config", configs["rot"], "--against", configs["eye"]]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "same-law-despite-different-A"


def test_numerical_failure_exit_3(tmp_path, capsys):
    # Real parts 1e-3 apart with strong coupling: adapted basis has cond ~ 1e14.
    cfg = _write(tmp_path / "nd.json", {"T": 1.0, "A": [[0.5, 1e4], [0.0, 0.501]], "Sigma": [[1, 0], [0, 1]]})
    assert main(["decompose", "--config", cfg]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_module_entry_point(configs):
    res = subprocess.run([sys.executable, "-m", "opbridge", "classify", "--config", configs["skew"]], capture_output=True, text=True)
    assert res.returncode == 0 and "counterexample-class" in res.stdout
    res = subprocess.run([sys.executable, "-m", "opbridge", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "opbridge" in res.stdout
