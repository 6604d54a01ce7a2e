"""
Experiment harness: multi-trial runs, the step-identity audit and
schedule/bound sweeps.
"""

from noisy_kaczmarz.experiments.audit import AuditSummary, audit_suite
from noisy_kaczmarz.experiments.runner import (
    AggregateCurve,
    ExperimentResult,
    run_experiment,
    run_trial,
)
from noisy_kaczmarz.experiments.sweeps import (
    bound_sweep,
    emit_schedule_table,
    emit_sweep,
    schedule_series,
    sweep_series,
)

__all__ = [
    "AggregateCurve",
    "AuditSummary",
    "ExperimentResult",
    "audit_suite",
    "bound_sweep",
    "emit_schedule_table",
    "emit_sweep",
    "run_experiment",
    "run_trial",
    "schedule_series",
    "sweep_series",
]
