"""
CSV and JSON emission of curves, traces, schedule tables and run manifests.

Floats are written with ``repr`` (shortest round-trip form) and JSON keys are
sorted, so rerunning an experiment reproduces every file byte for byte.
NaN is written as ``nan`` in CSV and ``null`` in JSON; missing values
(the last trace record) are empty CSV cells.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from noisy_kaczmarz.common.errors import ParameterError
from noisy_kaczmarz.common.logger import get_logger
from noisy_kaczmarz.experiments.runner import AggregateCurve, ExperimentResult
from noisy_kaczmarz.experiments.sweeps import BOUND_SWEEP_COLUMNS, BoundSeries, ScheduleSeries
from noisy_kaczmarz.solver import SolveTrace

logger = get_logger(__name__)

MANIFEST_VERSION = "1"
MANIFEST_FILE = "manifest.json"
FORMATS = ("csv", "json")
TRACE_COLUMNS = ("k", "row", "alpha", "sq_error", "residual")

PathLike = Union[str, Path]
Columns = Mapping[str, Sequence[Any]]


def _check_format(fmt: str) -> str:
    if fmt not in FORMATS:
        raise ParameterError(f"unknown output format '{fmt}' (expected one of {FORMATS})")
    return fmt


def _scalar(value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def _csv_cell(value: Any) -> str:
    value = _scalar(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _json_cell(value: Any) -> Any:
    value = _scalar(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_csv(columns: Columns) -> str:
    names = list(columns)
    lengths = {len(columns[name]) for name in names}
    if len(lengths) > 1:
        raise ParameterError(f"columns have different lengths: {sorted(lengths)}")
    rows = zip(*(columns[name] for name in names))
    lines = [",".join(names)]
    lines.extend(",".join(_csv_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def render_json(columns: Columns, meta: Optional[Dict[str, Any]] = None) -> str:
    """Column-oriented JSON document: {"columns": {...}, "meta": {...}}."""
    doc: Dict[str, Any] = {
        "columns": {name: [_json_cell(v) for v in values] for name, values in columns.items()}
    }
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_columns(
    columns: Columns, path: PathLike, fmt: str = "csv", meta: Optional[Dict[str, Any]] = None
) -> Path:
    _check_format(fmt)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(columns) if fmt == "csv" else render_json(columns, meta)
    out.write_text(text, encoding="utf-8")
    logger.debug(f"Wrote {out}")
    return out


def write_curve(curve: AggregateCurve, path: PathLike, fmt: str = "csv") -> Path:
    """
    Aggregated error curve of one policy.

    CSV carries the fixed column set; JSON adds both asymptotes.
    """
    if fmt == "json":
        meta = {"policy": curve.policy, "trials": curve.trials}
        return write_columns(curve.columns(with_asymptotes=True), path, fmt, meta)
    return write_columns(curve.columns(), path, fmt)


def write_schedule_table(series: ScheduleSeries, path: PathLike, fmt: str = "csv") -> Path:
    meta = {
        "label": series.label,
        "eta": series.params.eta,
        "sigma2": series.params.sigma2,
        "beta0": series.params.beta0,
    }
    return write_columns(series.columns(), path, fmt, meta)


def write_trace(trace: SolveTrace, path: PathLike, fmt: str = "csv") -> Path:
    """Per-step record of one solve."""
    meta = {"policy": trace.policy, "sampler": trace.sampler, "seed": trace.seed}
    return write_columns(trace.to_columns(), path, fmt, meta)


def write_bound_sweep(series: Iterable[BoundSeries], path: PathLike, fmt: str = "csv") -> Path:
    """All σ levels stacked in long form: k, sigma, f_k, relative_bound."""
    columns: Dict[str, List[Any]] = {name: [] for name in BOUND_SWEEP_COLUMNS}
    for s in series:
        columns["k"].extend(s.k.tolist())
        columns["sigma"].extend([s.sigma] * len(s.k))
        columns["f_k"].extend(s.f_k.tolist())
        columns["relative_bound"].extend(s.relative_bound.tolist())
    return write_columns(columns, path, fmt)


def _config_echo(result: ExperimentResult) -> Dict[str, Any]:
    # Output location and pool size do not affect results
    return result.config.model_dump(mode="json", exclude={"output", "workers"})


def write_manifest(result: ExperimentResult, files: Sequence[Path], path: PathLike) -> Path:
    out = Path(path)
    manifest = {
        "schema_version": MANIFEST_VERSION,
        "config": _config_echo(result),
        "resolved": {
            "eta": result.config.resolved_eta,
            "beta0": result.config.resolved_beta0,
            "k_max": result.config.resolved_k_max,
            "x0_err2": result.config.assumed_x0_err2,
        },
        "policies": result.policies,
        "files": sorted(f.name for f in files),
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return out


def write_result(result: ExperimentResult, out_dir: PathLike, fmt: Optional[str] = None) -> List[Path]:
    """
    Write every curve, the single-seed traces (when kept) and the manifest.

    Returns:
        Paths written, manifest last.
    """
    fmt = _check_format(fmt or result.config.format)
    target = Path(out_dir)
    files: List[Path] = []
    for name, curve in result.curves.items():
        files.append(write_curve(curve, target / f"curve_{name}.{fmt}", fmt))
    for name, trace in result.traces.items():
        files.append(write_trace(trace, target / f"trace_{name}.{fmt}", fmt))
    files.append(write_manifest(result, files, target / MANIFEST_FILE))
    logger.info(f"Wrote {len(files)} files to {target}")
    return files
