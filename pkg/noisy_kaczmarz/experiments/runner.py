"""
Multi-trial experiment runner.

Each trial generates its own problem from seeds derived from
(master_seed, trial), then solves it once per policy with the same row
sampler key, so every policy in a trial sees the same problem and the same
row order. Trials run on a thread pool; results are reduced in trial order,
which makes the output independent of the worker count.
"""

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from opentelemetry import context as otel_context

from noisy_kaczmarz.common.config import RuntimeSettings
from noisy_kaczmarz.common.logger import StructuredLogger, get_logger
from noisy_kaczmarz.common.telemetry import get_tracer, record_trial
from noisy_kaczmarz.config_loader import ExperimentConfig
from noisy_kaczmarz.core.sampler import derive_seed
from noisy_kaczmarz.core.schedule import (
    BoundParams,
    ScheduleParams,
    bound_curve,
    iterate_schedule,
)
from noisy_kaczmarz.generators import generate_problem
from noisy_kaczmarz.policies.base import BaseRatePolicy
from noisy_kaczmarz.policies.factory import RatePolicyFactory
from noisy_kaczmarz.solver import SolveTrace, solve

logger = get_logger(__name__)
events = StructuredLogger(__name__)

FloatArray = npt.NDArray[np.float64]

STREAM_PROBLEM = 0
STREAM_SAMPLER = 1

CURVE_COLUMNS = (
    "k",
    "alpha",
    "beta_sigma2",
    "f_k",
    "needell",
    "mse_mean",
    "mse_median",
    "mse_p10",
    "mse_p90",
    "relerr_median",
)
ASYMPTOTE_COLUMNS = ("asymptote_small_sigma", "asymptote_large_k")


def trial_seeds(master_seed: int, trial: int) -> Tuple[int, Tuple[int, int, int]]:
    """Problem seed and sampler key of one trial."""
    return derive_seed(master_seed, trial, STREAM_PROBLEM), (master_seed, trial, STREAM_SAMPLER)


@dataclass
class TrialOutcome:
    """Squared-error curves of one trial, one per policy."""

    trial: int
    problem_seed: int
    x_norm: float
    sq_errors: Dict[str, FloatArray]
    traces: Dict[str, SolveTrace] = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class AggregateCurve:
    """
    Per-k statistics of one policy across trials, with the reference
    columns aligned on the same k grid (k = 0..k_max).
    """

    policy: str
    trials: int
    k: npt.NDArray[np.int64]
    alpha: FloatArray
    beta_sigma2: FloatArray
    f_k: FloatArray
    needell: FloatArray
    mse_mean: FloatArray
    mse_median: FloatArray
    mse_p10: FloatArray
    mse_p90: FloatArray
    relerr_median: FloatArray
    asymptote_small_sigma: FloatArray
    asymptote_large_k: FloatArray

    def __len__(self) -> int:
        return int(self.k.shape[0])

    def columns(self, with_asymptotes: bool = False) -> Dict[str, np.ndarray]:
        names = CURVE_COLUMNS + (ASYMPTOTE_COLUMNS if with_asymptotes else ())
        return {name: getattr(self, name) for name in names}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    curves: Dict[str, AggregateCurve]
    traces: Dict[str, SolveTrace] = field(default_factory=dict)
    policies: Dict[str, Dict[str, object]] = field(default_factory=dict)


def build_policies(cfg: ExperimentConfig) -> List[BaseRatePolicy]:
    """Instantiate every configured policy with the experiment's η, σ² and β0."""
    context = {"eta": cfg.resolved_eta, "sigma2": cfg.sigma2, "beta0": cfg.resolved_beta0}
    return [RatePolicyFactory.create(policy_cfg, **context) for policy_cfg in cfg.policies]


def run_trial(
    cfg: ExperimentConfig,
    trial: int,
    policies: List[BaseRatePolicy],
    keep_traces: bool = False,
    parent: Optional[otel_context.Context] = None,
) -> TrialOutcome:
    """
    Generate the trial's problem and solve it under every policy.

    ``parent`` is the tracing context the trial span hangs off; pool
    threads do not inherit the caller's context.
    """
    start = time.perf_counter()
    problem_seed, sampler_key = trial_seeds(cfg.master_seed, trial)
    with get_tracer().start_as_current_span("noisy_kaczmarz.trial", context=parent) as span:
        span.set_attribute("trial.index", trial)
        span.set_attribute("trial.problem_seed", problem_seed)
        spec = cfg.ensemble.model_copy(update={"seed": problem_seed})
        problem = generate_problem(spec)
        assert problem.x_true is not None

        sq_errors: Dict[str, FloatArray] = {}
        traces: Dict[str, SolveTrace] = {}
        for policy in policies:
            trace = solve(
                problem,
                policy,
                sampler_kind=cfg.sampler,
                seed=sampler_key,
                k_max=cfg.resolved_k_max,
            )
            assert trace.sq_errors is not None
            sq_errors[policy.name] = trace.sq_errors
            if keep_traces:
                traces[policy.name] = trace

    seconds = time.perf_counter() - start
    record_trial(seconds, cfg.name)
    x_norm = float(np.linalg.norm(problem.x_true))
    events.debug(
        "trial_finished",
        experiment=cfg.name,
        trial=trial,
        problem_seed=problem_seed,
        final_sq_error={name: float(curve[-1]) for name, curve in sq_errors.items()},
    )
    return TrialOutcome(
        trial=trial,
        problem_seed=problem_seed,
        x_norm=x_norm,
        sq_errors=sq_errors,
        traces=traces,
        seconds=seconds,
    )


def _policy_alphas(policy: BaseRatePolicy, length: int) -> FloatArray:
    """α_k for k = 0..length-1; NaN past the end of a finite rate list."""
    values = list(itertools.islice(policy.rates(), length))
    out = np.full(length, math.nan)
    out[: len(values)] = values
    return out


def reference_columns(cfg: ExperimentConfig) -> Dict[str, FloatArray]:
    """
    Policy-independent columns: σ²β_k, f(k), the α = 1 error curve
    (1 - η)^k‖x - x0‖² + σ²/η and both asymptotes of f.
    """
    k_max = cfg.resolved_k_max
    ks = np.arange(k_max + 1, dtype=np.float64)
    eta = cfg.resolved_eta
    sigma2 = cfg.sigma2
    x0_err2 = cfg.assumed_x0_err2

    table = iterate_schedule(ScheduleParams(eta=eta, sigma2=sigma2, beta0=cfg.resolved_beta0), k_max)
    small_sigma = np.exp(-eta * ks) * x0_err2
    if sigma2 > 0.0:
        f_k = bound_curve(ks, BoundParams.create(eta, sigma2, x0_err2))
    else:
        f_k = small_sigma.copy()
    large_k = np.full(k_max + 1, math.nan)
    large_k[1:] = sigma2 / (eta * eta * ks[1:])
    needell = (1.0 - eta) ** ks * x0_err2 + sigma2 / eta
    return {
        "beta_sigma2": table.sigma2_beta,
        "f_k": f_k,
        "needell": needell,
        "asymptote_small_sigma": small_sigma,
        "asymptote_large_k": large_k,
    }


def aggregate(
    cfg: ExperimentConfig,
    outcomes: List[TrialOutcome],
    policies: List[BaseRatePolicy],
) -> Dict[str, AggregateCurve]:
    """Reduce trial outcomes (in trial order) into one curve per policy."""
    ordered = sorted(outcomes, key=lambda o: o.trial)
    reference = reference_columns(cfg)
    k = np.arange(cfg.resolved_k_max + 1, dtype=np.int64)
    x_norms = np.array([o.x_norm for o in ordered])

    curves: Dict[str, AggregateCurve] = {}
    for policy in policies:
        errors = np.vstack([o.sq_errors[policy.name] for o in ordered])
        p10, median, p90 = np.percentile(errors, [10.0, 50.0, 90.0], axis=0)
        relerr = np.sqrt(errors) / x_norms[:, None]
        curves[policy.name] = AggregateCurve(
            policy=policy.name,
            trials=len(ordered),
            k=k,
            alpha=_policy_alphas(policy, len(k)),
            beta_sigma2=reference["beta_sigma2"],
            f_k=reference["f_k"],
            needell=reference["needell"],
            mse_mean=errors.mean(axis=0),
            mse_median=median,
            mse_p10=p10,
            mse_p90=p90,
            relerr_median=np.median(relerr, axis=0),
            asymptote_small_sigma=reference["asymptote_small_sigma"],
            asymptote_large_k=reference["asymptote_large_k"],
        )
    return curves


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """
    Run every trial of ``cfg`` and aggregate.

    Args:
        cfg: Validated experiment configuration.
        workers: Pool size; defaults to ``cfg.workers``, then the runtime setting.
    """
    pool_size = workers or cfg.workers or RuntimeSettings.from_env().workers
    policies = build_policies(cfg)
    tracer = get_tracer()

    with tracer.start_as_current_span("noisy_kaczmarz.experiment") as span:
        span.set_attribute("experiment.name", cfg.name)
        span.set_attribute("experiment.trials", cfg.trials)
        span.set_attribute("experiment.k_max", cfg.resolved_k_max)
        events.info(
            "experiment_started",
            experiment=cfg.name,
            trials=cfg.trials,
            k_max=cfg.resolved_k_max,
            policies=[p.name for p in policies],
            workers=pool_size,
        )
        start = time.perf_counter()
        parent = otel_context.get_current()

        def _run(trial: int) -> TrialOutcome:
            keep = cfg.single_trace and trial == 0
            return run_trial(cfg, trial, policies, keep_traces=keep, parent=parent)

        with ThreadPoolExecutor(max_workers=pool_size, thread_name_prefix="trial") as pool:
            outcomes = list(pool.map(_run, range(cfg.trials)))

        curves = aggregate(cfg, outcomes, policies)
        traces = outcomes[0].traces if outcomes else {}
        final = {name: float(curve.mse_mean[-1]) for name, curve in curves.items()}
        events.info(
            "experiment_finished",
            experiment=cfg.name,
            seconds=round(time.perf_counter() - start, 3),
            final_mse_mean=final,
        )
        for name, value in final.items():
            span.set_attribute(f"experiment.final_mse_mean.{name}", value)

    return ExperimentResult(
        config=cfg,
        curves=curves,
        traces=traces,
        policies={p.name: p.describe() for p in policies},
    )
