"""
Randomized check of the exact one-step error identities.

Steps cycle through α ∈ {0, 0.3, 1, 1.7}, sparse and dense rows, and noisy
and exact observations, each from a random iterate and a random row. Noisy
steps draw a fresh ε ~ N(0, σ²‖a_i‖²) for the chosen row, so the Z_k means
estimate E[Z_k] rather than replaying one fixed noise vector.
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from noisy_kaczmarz.common.errors import ParameterError
from noisy_kaczmarz.common.logger import StructuredLogger
from noisy_kaczmarz.core.sampler import make_rng
from noisy_kaczmarz.generators import EnsembleSpec, generate_problem
from noisy_kaczmarz.solver import Problem, step_identity_audit

events = StructuredLogger(__name__)

AUDIT_ALPHAS: Tuple[float, ...] = (0.0, 0.3, 1.0, 1.7)
AUDIT_TOLERANCE = 1e-10
STREAM_AUDIT = 3

_AUDIT_M = 64
_AUDIT_N = 32
_AUDIT_S = 4
_AUDIT_SIGMA = 0.1


@dataclass
class AuditSummary:
    """
    Worst residuals over the suite.

    ``z_mean`` maps α to the sample mean of Z_k over noisy steps, each with
    its own noise draw;
    ``z_expected`` to α²σ², its expectation for unit rows.
    """

    steps: int
    max_pythagorean_residual: float
    max_decomposition_residual: float
    tolerance: float
    z_mean: Dict[float, float] = field(default_factory=dict)
    z_expected: Dict[float, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            self.max_pythagorean_residual <= self.tolerance
            and self.max_decomposition_residual <= self.tolerance
        )


def _audit_problems(seed: int) -> Dict[str, Problem]:
    sparse = EnsembleSpec(
        kind="sparse-sphere", m=_AUDIT_M, n=_AUDIT_N, s=_AUDIT_S, sigma=_AUDIT_SIGMA, seed=seed
    )
    dense = EnsembleSpec(kind="dense-sphere", m=_AUDIT_M, n=_AUDIT_N, sigma=_AUDIT_SIGMA, seed=seed)
    return {"sparse": generate_problem(sparse), "dense": generate_problem(dense)}


def audit_suite(n_steps: int = 10_000, seed: int = 0, tolerance: float = AUDIT_TOLERANCE) -> AuditSummary:
    """
    Run ``n_steps`` randomized single-step audits.

    Raises:
        ParameterError: n_steps < 1.
    """
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    problems = _audit_problems(seed)
    rng = make_rng((seed, STREAM_AUDIT))

    worst_pyth = 0.0
    worst_decomp = 0.0
    z_sums = {alpha: 0.0 for alpha in AUDIT_ALPHAS}
    z_counts = {alpha: 0 for alpha in AUDIT_ALPHAS}
    for step in range(n_steps):
        alpha = AUDIT_ALPHAS[step % len(AUDIT_ALPHAS)]
        p = problems["sparse" if (step // len(AUDIT_ALPHAS)) % 2 == 0 else "dense"]
        noisy = (step // (2 * len(AUDIT_ALPHAS))) % 2 == 0
        assert p.b is not None and p.x_true is not None

        i = int(rng.integers(0, p.m))
        x_k = p.x_true + rng.standard_normal(p.n)
        observed = float(p.b[i])
        if noisy:
            scale = _AUDIT_SIGMA * float(np.sqrt(p.A.row_norm2[i]))
            observed += scale * float(rng.standard_normal())
        audit = step_identity_audit(p, x_k, i, alpha, b_tilde_i=observed)

        worst_pyth = max(worst_pyth, audit.pythagorean_residual)
        worst_decomp = max(worst_decomp, audit.decomposition_residual)
        if noisy:
            z_sums[alpha] += audit.z_k
            z_counts[alpha] += 1

    summary = AuditSummary(
        steps=n_steps,
        max_pythagorean_residual=worst_pyth,
        max_decomposition_residual=worst_decomp,
        tolerance=tolerance,
        z_mean={a: z_sums[a] / z_counts[a] for a in AUDIT_ALPHAS if z_counts[a]},
        z_expected={a: a * a * _AUDIT_SIGMA**2 for a in AUDIT_ALPHAS if z_counts[a]},
    )
    events.info(
        "audit_finished",
        steps=n_steps,
        seed=seed,
        max_pythagorean_residual=worst_pyth,
        max_decomposition_residual=worst_decomp,
        passed=summary.passed,
    )
    return summary
