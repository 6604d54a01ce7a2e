"""
Pytest configuration and shared fixtures.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
_project_root = Path(__file__).resolve().parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from noisy_kaczmarz.config_loader import ExperimentConfig, parse_experiment_config  # noqa: E402
from noisy_kaczmarz.core.linalg import RowMatrix, SparseRow  # noqa: E402
from noisy_kaczmarz.generators import EnsembleSpec, generate_problem  # noqa: E402
from noisy_kaczmarz.solver import Problem  # noqa: E402


@pytest.fixture
def mixed_matrix():
    """A 4x5 matrix with two sparse and two dense rows."""
    rows = [
        SparseRow(np.array([0, 3]), np.array([1.0, -2.0])),
        np.array([0.5, 1.0, -1.0, 0.0, 2.0]),
        SparseRow(np.array([1, 2, 4]), np.array([3.0, 0.25, -1.5])),
        np.array([1.0, 1.0, 1.0, 1.0, 1.0]),
    ]
    return RowMatrix(rows, 5)


@pytest.fixture
def sparse_problem() -> Problem:
    """Small noisy sparse-sphere problem with ground truth."""
    return generate_problem(EnsembleSpec(kind="sparse-sphere", m=300, n=30, s=5, sigma=0.05, seed=3))


@pytest.fixture
def dense_problem() -> Problem:
    """Small noisy dense-sphere problem with ground truth."""
    return generate_problem(EnsembleSpec(kind="dense-sphere", m=200, n=20, sigma=0.1, seed=5))


@pytest.fixture
def small_experiment_data() -> dict:
    """A fast two-policy experiment as a plain mapping."""
    return {
        "name": "small",
        "ensemble": {"kind": "sparse-sphere", "m": 200, "n": 20, "s": 4, "sigma": 0.05},
        "eta": 0.05,
        "policies": [
            {"name": "scheduled", "type": "scheduled_optimal"},
            {"name": "constant", "type": "constant", "params": {"mu": 1.0}},
        ],
        "trials": 4,
        "master_seed": 9,
    }


@pytest.fixture
def small_experiment(small_experiment_data) -> ExperimentConfig:
    return parse_experiment_config(small_experiment_data)

