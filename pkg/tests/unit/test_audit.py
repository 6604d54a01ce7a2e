"""
Unit tests for the randomized step-identity audit.
"""

import logging

import pytest

from noisy_kaczmarz.common.errors import ParameterError
from noisy_kaczmarz.experiments.audit import AUDIT_ALPHAS, AUDIT_TOLERANCE, AuditSummary, audit_suite

pytestmark = pytest.mark.unit


def test_audit_passes(caplog):
    with caplog.at_level(logging.INFO, logger="noisy_kaczmarz.experiments.audit"):
        summary = audit_suite(n_steps=2000, seed=5)
    assert summary.steps == 2000
    assert summary.passed
    assert summary.max_pythagorean_residual <= AUDIT_TOLERANCE
    assert summary.max_decomposition_residual <= AUDIT_TOLERANCE
    assert any("audit_finished" in record.getMessage() for record in caplog.records)


def test_audit_noise_term_statistics():
    """Test E[Z_k] = 0 at α = 0 and ≈ σ² at α = 1 (unit rows)."""
    summary = audit_suite(n_steps=4000, seed=1)
    assert set(summary.z_mean) == set(AUDIT_ALPHAS)
    assert summary.z_mean[0.0] == 0.0
    assert summary.z_expected[1.0] == pytest.approx(0.01)
    assert summary.z_mean[1.0] == pytest.approx(0.01, rel=0.4)


def test_audit_noise_term_concentrates_on_sigma2():
    """Test that fresh noise per step makes the α = 1 mean of Z_k ≈ σ² over 2000 draws."""
    summary = audit_suite(n_steps=16_000, seed=4)
    assert summary.z_mean[1.0] == pytest.approx(summary.z_expected[1.0], rel=0.15)


def test_audit_is_deterministic():
    assert audit_suite(n_steps=64, seed=2) == audit_suite(n_steps=64, seed=2)


def test_audit_validation():
    with pytest.raises(ParameterError):
        audit_suite(n_steps=0)


def test_summary_fails_above_tolerance():
    summary = AuditSummary(
        steps=1, max_pythagorean_residual=1e-6, max_decomposition_residual=0.0, tolerance=1e-10
    )
    assert not summary.passed
