"""
Reporter module - CSV/JSON output for curves, traces and schedule tables.
"""

from noisy_kaczmarz.reporter.curves import (
    write_bound_sweep,
    write_curve,
    write_manifest,
    write_result,
    write_schedule_table,
    write_trace,
)

__all__ = [
    "write_bound_sweep",
    "write_curve",
    "write_manifest",
    "write_result",
    "write_schedule_table",
    "write_trace",
]
