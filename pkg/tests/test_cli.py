import json

import pandas as pd
import pytest

from src.ingestion.problem_file import load_problem
from src.main import EXIT_AUDIT, EXIT_INVALID, EXIT_OK, EXIT_ORACLE, main


@pytest.fixture
def short_run(tmp_path):
    """A 0.2 time-unit run of the default assignment instance."""
    out = tmp_path / "run"
    code = main(["simulate", "--t-max", "0.2", "--out", str(out)])
    return code, out


def test_simulate_writes_artifacts(short_run):
    code, out = short_run
    assert code == EXIT_OK
    for name in ("trajectory.csv", "events.csv", "metrics.txt", "config.echo"):
        assert (out / name).exists(), f"Missing {name}"

    metrics = json.loads((out / "metrics.txt").read_text())
    assert metrics["status"] == "ok"
    assert metrics["problem"] == "assignment-2"
    assert metrics["x_star"] == pytest.approx([0.0, 1.0, 1.0, 0.0])
    assert metrics["t_end"] == pytest.approx(0.2)

    trajectory = pd.read_csv(out / "trajectory.csv", dtype={"sigma": str})
    assert list(trajectory.columns[:2]) == ["t", "j"]
    assert {"x0", "z3", "xhat0", "zhat3", "V", "V1", "V2", "sigma"} <= set(trajectory.columns)
    assert trajectory["sigma"].str.len().eq(4).all()


def test_echo_reproduces_run(short_run, tmp_path):
    code, out = short_run
    rerun = tmp_path / "rerun"
    assert main(["simulate", "--config", str(out / "config.echo"), "--out", str(rerun)]) == EXIT_OK
    assert (rerun / "events.csv").read_text() == (out / "events.csv").read_text()
    assert (rerun / "trajectory.csv").read_text() == (out / "trajectory.csv").read_text()


def test_audit_command(short_run):
    _, out = short_run
    assert main(["audit", "--run-dir", str(out)]) == EXIT_OK
    report = json.loads((out / "audit.json").read_text())
    assert "lyapunov_audit" in report and "mismatch_audit" in report


def test_audit_fails_on_tampered_trajectory(short_run):
    """Moving the last sample far from the saddle makes V rise, and the audit exits nonzero."""
    _, out = short_run
    path = out / "trajectory.csv"
    trajectory = pd.read_csv(path, dtype={"sigma": str})
    trajectory.loc[trajectory.index[-1], "x0"] += 50.0
    trajectory.to_csv(path, index=False, float_format="%.17g")

    assert main(["audit", "--run-dir", str(out)]) == EXIT_AUDIT
    report = json.loads((out / "audit.json").read_text())
    assert report["lyapunov_audit"]["increases"] >= 1
    assert not report["lyapunov_audit"]["passed"]


def test_invalid_trigger_parameters(tmp_path):
    """mu above 1/160 is rejected before anything is simulated."""
    out = tmp_path / "bad"
    assert main(["simulate", "--mu", "0.5", "--t-max", "0.1", "--out", str(out)]) == EXIT_INVALID
    assert not (out / "trajectory.csv").exists()


def test_invalid_config_value(tmp_path):
    assert main(["simulate", "--tau-scale", "1.5", "--out", str(tmp_path)]) == EXIT_INVALID


def test_missing_problem_file(tmp_path):
    assert main(["simulate", "--problem", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == EXIT_INVALID


def test_gen_assignment_writes_problem(tmp_path):
    path = tmp_path / "a3.json"
    assert main(["gen-assignment", "--N", "3", "--seed", "1", "--write", str(path)]) == EXIT_OK
    lp = load_problem(path)
    assert (lp.n, lp.m) == (9, 6)


def test_solve_oracle_prints_solution(capsys):
    assert main(["solve-oracle", "--gamma", "1", "--probe"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "(0, 1, 1, 0)" in out
    assert "threshold: 1" in out


def test_oracle_size_limit_exit_code():
    assert main(["solve-oracle", "--assignment-n", "5", "--assignment-seed", "2"]) == EXIT_ORACLE


def test_preprocess_writes_scaled_problem(tmp_path):
    path = tmp_path / "scaled.json"
    assert main(["preprocess", "--write", str(path)]) == EXIT_OK
    scaled = load_problem(path)
    assert scaled.dense_A.max() == pytest.approx(0.25)
