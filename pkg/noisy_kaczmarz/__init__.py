"""
noisy-kaczmarz - relaxed randomized Kaczmarz with the optimal scheduled
learning rate for noisy linear systems.

The package provides the Lambert-W based error bound, the learning-rate
schedule, a sampling-without-replacement solver, random problem ensembles
and a seeded multi-trial experiment harness with a command-line front-end.
"""

import importlib
from typing import TYPE_CHECKING

__version__ = "0.1.0"

if TYPE_CHECKING:
    from noisy_kaczmarz.config_loader import ExperimentConfig, load_experiment_config
    from noisy_kaczmarz.core.lambert_w import lambert_w0, lambert_w_exp
    from noisy_kaczmarz.core.linalg import RowMatrix, SparseRow, eta_of, min_singular_value
    from noisy_kaczmarz.core.sampler import RowSampler, in_order_policy
    from noisy_kaczmarz.core.schedule import (
        BoundParams,
        ScheduleParams,
        ScheduleState,
        bound_f,
        continuous_alpha,
        iterate_schedule,
        schedule_step,
    )
    from noisy_kaczmarz.experiments.runner import AggregateCurve, ExperimentResult, run_experiment
    from noisy_kaczmarz.generators import EnsembleSpec, generate_problem, make_problem
    from noisy_kaczmarz.policies import ConstantRate, ExplicitRate, ScheduledOptimalRate
    from noisy_kaczmarz.solver import Problem, SolveTrace, solve, step_identity_audit

_LAZY_IMPORTS = {
    "ExperimentConfig": ("noisy_kaczmarz.config_loader", "ExperimentConfig"),
    "load_experiment_config": ("noisy_kaczmarz.config_loader", "load_experiment_config"),
    "lambert_w0": ("noisy_kaczmarz.core.lambert_w", "lambert_w0"),
    "lambert_w_exp": ("noisy_kaczmarz.core.lambert_w", "lambert_w_exp"),
    "RowMatrix": ("noisy_kaczmarz.core.linalg", "RowMatrix"),
    "SparseRow": ("noisy_kaczmarz.core.linalg", "SparseRow"),
    "eta_of": ("noisy_kaczmarz.core.linalg", "eta_of"),
    "min_singular_value": ("noisy_kaczmarz.core.linalg", "min_singular_value"),
    "RowSampler": ("noisy_kaczmarz.core.sampler", "RowSampler"),
    "in_order_policy": ("noisy_kaczmarz.core.sampler", "in_order_policy"),
    "BoundParams": ("noisy_kaczmarz.core.schedule", "BoundParams"),
    "ScheduleParams": ("noisy_kaczmarz.core.schedule", "ScheduleParams"),
    "ScheduleState": ("noisy_kaczmarz.core.schedule", "ScheduleState"),
    "bound_f": ("noisy_kaczmarz.core.schedule", "bound_f"),
    "continuous_alpha": ("noisy_kaczmarz.core.schedule", "continuous_alpha"),
    "iterate_schedule": ("noisy_kaczmarz.core.schedule", "iterate_schedule"),
    "schedule_step": ("noisy_kaczmarz.core.schedule", "schedule_step"),
    "AggregateCurve": ("noisy_kaczmarz.experiments.runner", "AggregateCurve"),
    "ExperimentResult": ("noisy_kaczmarz.experiments.runner", "ExperimentResult"),
    "run_experiment": ("noisy_kaczmarz.experiments.runner", "run_experiment"),
    "EnsembleSpec": ("noisy_kaczmarz.generators", "EnsembleSpec"),
    "generate_problem": ("noisy_kaczmarz.generators", "generate_problem"),
    "make_problem": ("noisy_kaczmarz.generators", "make_problem"),
    "ConstantRate": ("noisy_kaczmarz.policies", "ConstantRate"),
    "ExplicitRate": ("noisy_kaczmarz.policies", "ExplicitRate"),
    "ScheduledOptimalRate": ("noisy_kaczmarz.policies", "ScheduledOptimalRate"),
    "Problem": ("noisy_kaczmarz.solver", "Problem"),
    "SolveTrace": ("noisy_kaczmarz.solver", "SolveTrace"),
    "solve": ("noisy_kaczmarz.solver", "solve"),
    "step_identity_audit": ("noisy_kaczmarz.solver", "step_identity_audit"),
}


def __getattr__(name: str):
    if name in _LAZY_IMPORTS:
        module_name, attr_name = _LAZY_IMPORTS[name]
        module = importlib.import_module(module_name)
        value = getattr(module, attr_name)
        globals()[name] = value
        return value
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")


def __dir__() -> list[str]:
    return sorted(list(globals().keys()) + list(_LAZY_IMPORTS.keys()))


__all__ = ["__version__"] + list(_LAZY_IMPORTS.keys())
