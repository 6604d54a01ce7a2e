"""
Schedule tables and bound sweeps for plotting.

The default base point is η = 0.01, σ = 0.05, ‖x - x0‖² = 100 and 2000
iterations. A sweep varies σ or η around it and keeps ‖x - x0‖² fixed, so
β0 = ‖x - x0‖²/σ² follows σ.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from noisy_kaczmarz.common.errors import ParameterError
from noisy_kaczmarz.common.logger import get_logger
from noisy_kaczmarz.core.schedule import (
    BoundParams,
    ScheduleParams,
    bound_curve,
    continuous_alpha_curve,
    iterate_schedule,
)

logger = get_logger(__name__)

FloatArray = npt.NDArray[np.float64]

BASE_ETA = 0.01
BASE_SIGMA = 0.05
BASE_X0_ERR2 = 100.0
BASE_K_MAX = 2000

SIGMA_SWEEP = (0.01, 0.1, 1.0)
ETA_SWEEP = (0.005, 0.01, 0.02)
BOUND_SWEEP_SIGMAS = (0.05, 0.1, 0.2)

SweepKind = Literal["sigma", "eta"]

SCHEDULE_COLUMNS = ("k", "alpha_k", "beta_k", "sigma2_beta_k", "f_k", "alpha_continuous_t")
BOUND_SWEEP_COLUMNS = ("k", "sigma", "f_k", "relative_bound")


@dataclass(frozen=True)
class ScheduleSeries:
    """
    Discrete schedule and its continuous counterpart on one grid.

    Without noise f and α(t) are undefined: ``f_k`` is NaN and
    ``alpha_continuous_t`` is 1.
    """

    label: str
    params: ScheduleParams
    k: npt.NDArray[np.int64]
    alpha_k: FloatArray
    beta_k: FloatArray
    sigma2_beta_k: FloatArray
    f_k: FloatArray
    alpha_continuous_t: FloatArray

    def __len__(self) -> int:
        return int(self.k.shape[0])

    def columns(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in SCHEDULE_COLUMNS}


def schedule_series(
    params: ScheduleParams,
    k_max: int,
    t_grid: Optional[Sequence[float]] = None,
    label: str = "schedule",
) -> ScheduleSeries:
    """
    Tabulate α_k, β_k, σ²β_k, f(k) and α(t) for k = 0..k_max.

    Args:
        params: Schedule hyperparameters.
        k_max: Last iteration index.
        t_grid: Points where α(t) is evaluated, one per row; defaults to t = k.
        label: Name of the series in file names.
    """
    table = iterate_schedule(params, k_max)
    ks = table.k.astype(np.float64)
    ts = ks if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    if ts.shape != ks.shape:
        raise ParameterError(f"t_grid needs {len(ks)} points, got {ts.size}")

    if params.noiseless:
        f_k = np.full(len(ks), math.nan)
        alpha_t = np.ones(len(ks))
    else:
        bp = BoundParams.from_schedule(params)
        f_k = bound_curve(ks, bp)
        alpha_t = continuous_alpha_curve(ts, bp)
    return ScheduleSeries(
        label=label,
        params=params,
        k=table.k,
        alpha_k=table.alpha,
        beta_k=table.beta,
        sigma2_beta_k=table.sigma2_beta,
        f_k=f_k,
        alpha_continuous_t=alpha_t,
    )


def sweep_series(
    kind: SweepKind,
    values: Optional[Sequence[float]] = None,
    eta: float = BASE_ETA,
    sigma: float = BASE_SIGMA,
    x0_err2: float = BASE_X0_ERR2,
    k_max: int = BASE_K_MAX,
) -> List[ScheduleSeries]:
    """One schedule series per σ (or η) value with the other parameters fixed."""
    if kind == "sigma":
        grid = SIGMA_SWEEP if values is None else tuple(values)
        params = [ScheduleParams.from_error(eta, s * s, x0_err2) for s in grid]
    elif kind == "eta":
        grid = ETA_SWEEP if values is None else tuple(values)
        params = [ScheduleParams.from_error(e, sigma * sigma, x0_err2) for e in grid]
    else:
        raise ParameterError(f"unknown sweep '{kind}' (expected 'sigma' or 'eta')")
    return [
        schedule_series(p, k_max, label=f"{kind}={value!r}") for p, value in zip(params, grid)
    ]


@dataclass(frozen=True)
class BoundSeries:
    """f(k) and √f(k)/‖x‖ for one noise level."""

    sigma: float
    k: npt.NDArray[np.int64]
    f_k: FloatArray
    relative_bound: FloatArray


def bound_sweep(
    sigmas: Sequence[float] = BOUND_SWEEP_SIGMAS,
    eta: float = BASE_ETA,
    x0_err2: float = BASE_X0_ERR2,
    k_max: int = BASE_K_MAX,
    x_norm2: Optional[float] = None,
) -> List[BoundSeries]:
    """
    Bound on the expected relative error for several σ.

    ``x_norm2`` defaults to ``x0_err2`` (x0 = 0).
    """
    norm2 = x0_err2 if x_norm2 is None else x_norm2
    if not norm2 > 0.0:
        raise ParameterError(f"x_norm2 must be > 0, got {norm2}")
    ks = np.arange(k_max + 1, dtype=np.int64)
    out = []
    for sigma in sigmas:
        if not sigma > 0.0:
            raise ParameterError(f"bound sweep needs sigma > 0, got {sigma}")
        f_k = bound_curve(ks, BoundParams.create(eta, sigma * sigma, x0_err2))
        out.append(BoundSeries(sigma=float(sigma), k=ks, f_k=f_k, relative_bound=np.sqrt(f_k / norm2)))
    return out


def emit_schedule_table(
    params: ScheduleParams,
    k_max: int,
    path: Union[str, Path],
    fmt: str = "csv",
    t_grid: Optional[Sequence[float]] = None,
) -> Path:
    """Tabulate the schedule and write it; returns the file written."""
    from noisy_kaczmarz.reporter.curves import write_schedule_table

    series = schedule_series(params, k_max, t_grid=t_grid)
    return write_schedule_table(series, path, fmt)


def emit_sweep(
    kind: SweepKind,
    out_dir: Union[str, Path],
    fmt: str = "csv",
    values: Optional[Sequence[float]] = None,
    eta: float = BASE_ETA,
    sigma: float = BASE_SIGMA,
    x0_err2: float = BASE_X0_ERR2,
    k_max: int = BASE_K_MAX,
) -> List[Path]:
    """Write one schedule table per sweep value into ``out_dir``."""
    from noisy_kaczmarz.reporter.curves import write_schedule_table

    target = Path(out_dir)
    paths = []
    series_list = sweep_series(kind, values=values, eta=eta, sigma=sigma, x0_err2=x0_err2, k_max=k_max)
    for series in series_list:
        name = series.label.replace("=", "_")
        paths.append(write_schedule_table(series, target / f"schedule_{name}.{fmt}", fmt))
    logger.info(f"Wrote {len(paths)} schedule tables for the {kind} sweep to {target}")
    return paths
