"""
Unit tests for CSV/JSON emission and the run manifest.
"""

import json
import math

import numpy as np
import pytest

from noisy_kaczmarz.common.errors import ParameterError
from noisy_kaczmarz.config_loader import apply_overrides
from noisy_kaczmarz.experiments.runner import CURVE_COLUMNS, run_experiment
from noisy_kaczmarz.experiments.sweeps import BOUND_SWEEP_COLUMNS, bound_sweep
from noisy_kaczmarz.policies.rates import ConstantRate
from noisy_kaczmarz.reporter.curves import (
    MANIFEST_FILE,
    TRACE_COLUMNS,
    render_csv,
    render_json,
    write_bound_sweep,
    write_columns,
    write_result,
    write_trace,
)
from noisy_kaczmarz.solver import Problem, solve

pytestmark = pytest.mark.unit


def test_render_csv_cells():
    text = render_csv({"k": [0, 1], "x": [0.1, math.nan], "y": [None, np.float64(2.5)]})
    assert text == "k,x,y\n0,0.1,\n1,nan,2.5\n"


def test_render_csv_rejects_ragged_columns():
    with pytest.raises(ParameterError, match="different lengths"):
        render_csv({"a": [1, 2], "b": [1]})


def test_render_json_replaces_non_finite():
    doc = json.loads(render_json({"x": [1.0, math.nan, math.inf], "k": np.arange(3)}, {"p": "s"}))
    assert doc == {"columns": {"k": [0, 1, 2], "x": [1.0, None, None]}, "meta": {"p": "s"}}


def test_float_repr_is_exact(tmp_path):
    values = [0.1 + 0.2, 1e-300, 123456.789e10]
    path = write_columns({"v": values}, tmp_path / "v.csv")
    parsed = [float(line) for line in path.read_text().splitlines()[1:]]
    assert parsed == values


def test_unknown_format(tmp_path):
    with pytest.raises(ParameterError, match="unknown output format"):
        write_columns({"v": [1]}, tmp_path / "v.txt", fmt="xml")


def test_trace_file(tmp_path, sparse_problem):
    trace = solve(sparse_problem, ConstantRate("constant"), seed=(1, 0, 1), k_max=5)
    path = write_trace(trace, tmp_path / "trace.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == 1 + 6
    assert lines[-1].startswith("5,,,")
    assert lines[-1].endswith(",")
    doc = json.loads(write_trace(trace, tmp_path / "trace.json", "json").read_text())
    assert doc["meta"] == {"policy": "constant", "sampler": "weighted", "seed": [1, 0, 1]}
    assert doc["columns"]["row"][-1] is None


def test_real_data_trace_has_empty_error_column(tmp_path, mixed_matrix):
    p = Problem(A=mixed_matrix, b_tilde=np.ones(4))
    trace = solve(p, ConstantRate("c"), seed=0, k_max=2)
    lines = write_trace(trace, tmp_path / "t.csv").read_text().splitlines()
    assert all(line.split(",")[3] == "" for line in lines[1:])


def test_bound_sweep_long_form(tmp_path):
    path = write_bound_sweep(bound_sweep(k_max=3), tmp_path / "b.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(BOUND_SWEEP_COLUMNS)
    assert len(lines) == 1 + 3 * 4
    assert lines[1].startswith("0,0.05,")


def test_write_result_files_and_manifest(tmp_path, small_experiment):
    cfg = apply_overrides(small_experiment, {"single_trace": True, "trials": 2})
    result = run_experiment(cfg, workers=1)
    files = write_result(result, tmp_path)
    assert [f.name for f in files] == [
        "curve_scheduled.csv",
        "curve_constant.csv",
        "trace_scheduled.csv",
        "trace_constant.csv",
        MANIFEST_FILE,
    ]
    header = (tmp_path / "curve_scheduled.csv").read_text().splitlines()[0]
    assert header == ",".join(CURVE_COLUMNS)

    manifest = json.loads((tmp_path / MANIFEST_FILE).read_text())
    assert manifest["schema_version"] == "1"
    assert manifest["resolved"]["eta"] == 0.05
    assert manifest["resolved"]["k_max"] == 200
    assert "workers" not in manifest["config"] and "output" not in manifest["config"]
    assert manifest["files"] == sorted(f.name for f in files[:-1])
    assert manifest["policies"]["constant"]["mu"] == 1.0


def test_json_curve_carries_asymptotes(tmp_path, small_experiment):
    cfg = apply_overrides(small_experiment, {"trials": 1, "format": "json"})
    write_result(run_experiment(cfg, workers=1), tmp_path)
    doc = json.loads((tmp_path / "curve_scheduled.json").read_text())
    assert doc["meta"] == {"policy": "scheduled", "trials": 1}
    assert doc["columns"]["asymptote_large_k"][0] is None
    assert len(doc["columns"]["asymptote_small_sigma"]) == 201


def test_rerun_is_byte_identical(tmp_path, small_experiment):
    first, second = tmp_path / "a", tmp_path / "b"
    write_result(run_experiment(small_experiment, workers=1), first)
    write_result(run_experiment(small_experiment, workers=2), second)
    for path in sorted(first.iterdir()):
        assert path.read_bytes() == (second / path.name).read_bytes(), path.name
