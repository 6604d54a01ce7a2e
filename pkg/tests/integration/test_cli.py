"""
End-to-end runs of the command-line interface.
"""

import json

import pytest
import yaml
from typer.testing import CliRunner

from noisy_kaczmarz import __version__
from noisy_kaczmarz.cli import app, main
from noisy_kaczmarz.experiments.sweeps import SCHEDULE_COLUMNS
from noisy_kaczmarz.storage.matrix_io import MATRIX_FILE, SIDECAR_FILE

pytestmark = pytest.mark.integration

runner = CliRunner()


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_bound_prints_closed_form_value():
    result = runner.invoke(app, ["bound", "--eta", "0.01", "--sigma", "0.05", "--x0-err2", "100", "--k", "2000"])
    assert result.exit_code == 0, result.output
    first = result.output.splitlines()[0]
    assert first.startswith("f(2000) = 0.0216")


def test_bound_rejects_noiseless_input():
    result = runner.invoke(app, ["bound", "--eta", "0.01", "--sigma", "0", "--x0-err2", "100", "--k", "10"])
    assert result.exit_code == 1
    assert "BOUND_DEGENERATE" in result.output


def test_schedule_table(tmp_path):
    args = ["--out", str(tmp_path), "schedule", "--eta", "0.5", "--beta0", "1", "--kmax", "1"]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "schedule.csv").read_text().splitlines()
    assert lines[0] == ",".join(SCHEDULE_COLUMNS)
    assert len(lines) == 3
    assert float(lines[1].split(",")[1]) == pytest.approx(1.0 / 3.0, rel=1e-15)


def test_schedule_rejects_both_initial_errors(tmp_path):
    args = ["--out", str(tmp_path), "schedule", "--beta0", "1", "--x0-err2", "5"]
    result = runner.invoke(app, args)
    assert result.exit_code == 1
    assert not (tmp_path / "schedule.csv").exists()


def test_usage_errors_return_two(capsys):
    assert main([]) == 2
    assert main(["no-such-command"]) == 2
    assert main(["bound", "--eta", "0.01"]) == 2


def test_failure_returns_one(tmp_path):
    assert main(["solve", "--problem", str(tmp_path / "missing")]) == 1


def test_collector_endpoint_enables_telemetry(mocker, monkeypatch):
    setup = mocker.patch("noisy_kaczmarz.cli.setup_telemetry")
    shutdown = mocker.patch("noisy_kaczmarz.cli.shutdown_telemetry")
    monkeypatch.setenv("OTEL_EXPORTER_OTLP_ENDPOINT", "http://collector:4317")
    assert main(["version"]) == 0
    setup.assert_called_once_with()
    shutdown.assert_called_once_with()


def test_telemetry_stays_off_without_endpoint_or_flag(mocker, monkeypatch):
    setup = mocker.patch("noisy_kaczmarz.cli.setup_telemetry")
    shutdown = mocker.patch("noisy_kaczmarz.cli.shutdown_telemetry")
    monkeypatch.delenv("OTEL_EXPORTER_OTLP_ENDPOINT", raising=False)
    assert main(["version"]) == 0
    setup.assert_not_called()
    shutdown.assert_not_called()
    assert main(["--telemetry", "version"]) == 0
    setup.assert_called_once_with()
    shutdown.assert_called_once_with()


def test_gen_problem_then_solve(tmp_path):
    problem_dir = tmp_path / "problem"
    gen = ["--seed", "7", "--out", str(problem_dir), "gen-problem"]
    gen += ["--m", "300", "--n", "20", "--s", "4", "--sigma", "0.05"]
    assert main(gen) == 0
    assert (problem_dir / MATRIX_FILE).is_file()
    sidecar = json.loads((problem_dir / SIDECAR_FILE).read_text())
    assert sidecar["seed"] == 7

    out = tmp_path / "out"
    assert main(["--out", str(out), "solve", "--problem", str(problem_dir)]) == 0
    lines = (out / "trace_scheduled_optimal.csv").read_text().splitlines()
    assert len(lines) == 1 + 301
    first_err = float(lines[1].split(",")[3])
    last_err = float(lines[-1].split(",")[3])
    assert last_err < first_err


def test_solve_without_ground_truth(tmp_path):
    problem_dir = tmp_path / "problem"
    gen = ["--out", str(problem_dir), "gen-problem", "--m", "50", "--n", "5", "--kind", "dense-sphere"]
    assert main(gen + ["--withhold-truth"]) == 0
    out = tmp_path / "out"
    args = ["--out", str(out), "--format", "json", "solve", "--problem", str(problem_dir)]
    args += ["--policy", "constant", "--mu", "0.5", "--kmax", "10"]
    assert main(args) == 0
    doc = json.loads((out / "trace_constant.json").read_text())
    assert all(value is None for value in doc["columns"]["sq_error"])


def test_experiment_output_independent_of_workers(tmp_path, small_experiment_data):
    config = tmp_path / "small.yaml"
    config.write_text(yaml.safe_dump(small_experiment_data))
    for workers, name in ((1, "a"), (3, "b")):
        args = ["--config", str(config), "--out", str(tmp_path / name), "experiment"]
        assert main(args + ["--workers", str(workers), "--kmax", "100"]) == 0
    first = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "curve_scheduled.csv" in first and "curve_constant.csv" in first
    for name in first:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_experiment_seed_flag_overrides_config(tmp_path, small_experiment_data):
    config = tmp_path / "small.yaml"
    config.write_text(yaml.safe_dump(small_experiment_data))
    args = ["--seed", "123", "--config", str(config), "--out", str(tmp_path), "experiment", "--trials", "1"]
    assert main(args + ["--kmax", "20"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 123
    assert manifest["config"]["trials"] == 1


def test_audit_command():
    result = runner.invoke(app, ["--seed", "3", "audit", "--steps", "200"])
    assert result.exit_code == 0, result.output
    assert "All identities hold" in result.output
