"""
Unit tests for the relaxed Kaczmarz solver and the step identities.
"""

import numpy as np
import pytest

from noisy_kaczmarz.common.errors import DimensionMismatchError, ErrorCode, ParameterError
from noisy_kaczmarz.core.linalg import RowMatrix, eta_of, row_dot
from noisy_kaczmarz.core.sampler import make_rng
from noisy_kaczmarz.generators import EnsembleSpec, generate_problem
from noisy_kaczmarz.policies.rates import ConstantRate, ExplicitRate, ScheduledOptimalRate
from noisy_kaczmarz.solver import (
    Problem,
    empirical_eta,
    kaczmarz_step,
    projection_terms,
    solve,
    step_identity_audit,
)

pytestmark = pytest.mark.unit


def test_problem_derives_clean_rhs(mixed_matrix):
    """Test that b is computed from x_true and the noise is b̃ - b."""
    x = np.array([1.0, -1.0, 0.5, 2.0, 0.0])
    b = mixed_matrix.to_dense() @ x
    p = Problem(A=mixed_matrix, b_tilde=b + 0.1, x_true=x, sigma=0.1)
    assert np.allclose(p.b, b)
    assert np.allclose(p.noise, 0.1)
    assert p.has_ground_truth
    assert (p.m, p.n) == (4, 5)


def test_problem_validation(mixed_matrix):
    x = np.ones(5)
    with pytest.raises(ParameterError, match="inconsistent"):
        Problem(A=mixed_matrix, b_tilde=np.zeros(4), x_true=x, b=np.zeros(4))
    with pytest.raises(DimensionMismatchError):
        Problem(A=mixed_matrix, b_tilde=np.zeros(3))
    with pytest.raises(ParameterError):
        Problem(A=mixed_matrix, b_tilde=np.zeros(4), sigma=-1.0)
    real = Problem(A=mixed_matrix, b_tilde=np.zeros(4))
    assert not real.has_ground_truth
    assert real.noise is None


def test_kaczmarz_step_projects_with_unit_rate(mixed_matrix):
    """Test that α = 1 lands on the hyperplane and α = 0 leaves x alone."""
    x = np.array([0.2, 0.1, -0.3, 0.0, 1.0])
    for i in range(4):
        projected = kaczmarz_step(x, mixed_matrix, i, 3.0, 1.0)
        assert row_dot(mixed_matrix, i, projected) == pytest.approx(3.0, rel=1e-12)
        assert np.array_equal(kaczmarz_step(x, mixed_matrix, i, 3.0, 0.0), x)
    assert x.tolist() == [0.2, 0.1, -0.3, 0.0, 1.0]


def test_kaczmarz_step_relaxation_scales_the_move(mixed_matrix):
    x = np.zeros(5)
    full = kaczmarz_step(x, mixed_matrix, 2, 1.0, 1.0)
    half = kaczmarz_step(x, mixed_matrix, 2, 1.0, 0.5)
    assert np.allclose(half, 0.5 * full)
    with pytest.raises(ParameterError):
        kaczmarz_step(x, mixed_matrix, 2, 1.0, float("nan"))
    with pytest.raises(DimensionMismatchError):
        kaczmarz_step(np.zeros(4), mixed_matrix, 2, 1.0, 1.0)


def test_noiseless_projection_never_increases_error():
    """Test monotone ‖x - x_k‖² for α = 1 on exact data, and convergence."""
    p = generate_problem(EnsembleSpec(kind="dense-sphere", m=400, n=20, sigma=0.0, seed=1))
    trace = solve(p, ConstantRate("plain", mu=1.0), seed=(1, 1))
    assert trace.sq_errors is not None
    assert np.all(np.diff(trace.sq_errors) <= 1e-12 * trace.sq_errors[0])
    assert trace.sq_errors[-1] < 1e-6 * trace.sq_errors[0]


def test_noiseless_mean_error_decays_at_least_at_eta_rate():
    """Test E‖x - x_k‖² ≤ (1 - η)^k‖x - x0‖² over 100 sampler seeds, η = eta_of(A)."""
    p = generate_problem(EnsembleSpec(kind="dense-sphere", m=200, n=20, sigma=0.0, seed=8))
    eta = eta_of(p.A)
    assert 0.0 < eta < 1.0
    curves = np.vstack(
        [solve(p, ConstantRate("plain", mu=1.0), seed=(8, seed)).sq_errors for seed in range(100)]
    )
    x0_err2 = float(np.sum(p.x_true**2))
    assert np.all(curves[:, 0] == curves[0, 0])
    assert curves[0, 0] == pytest.approx(x0_err2, rel=1e-12)
    mean = curves.mean(axis=0)
    bound = (1.0 - eta) ** np.arange(mean.size) * x0_err2
    # 100 seeds leave about 1% sampling noise on the mean at small k
    assert np.all(mean <= bound * 1.02), int(np.argmax(mean / bound))


def test_noiseless_scheduled_rate_matches_constant_bitwise():
    """Test that with σ = 0 the scheduled policy reproduces α = 1 exactly, row for row."""
    p = generate_problem(EnsembleSpec(kind="dense-sphere", m=200, n=20, sigma=0.0, seed=8))
    scheduled = ScheduledOptimalRate("scheduled", eta=eta_of(p.A), sigma2=0.0, beta0=0.0)
    first = solve(p, scheduled, seed=(8, 0, 1))
    second = solve(p, ConstantRate("constant", mu=1.0), seed=(8, 0, 1))
    assert np.all(first.alphas == 1.0)
    assert np.array_equal(first.rows, second.rows)
    assert np.array_equal(first.alphas, second.alphas)
    assert np.array_equal(first.sq_errors, second.sq_errors)
    assert np.array_equal(first.x_final, second.x_final)


def test_scheduled_rate_reduces_noisy_error(sparse_problem):
    eta = 1.0 / sparse_problem.n
    sigma2 = sparse_problem.sigma**2
    policy = ScheduledOptimalRate("scheduled", eta=eta, sigma2=sigma2, beta0=sparse_problem.n / sigma2)
    trace = solve(sparse_problem, policy, seed=(3, 1))
    assert trace.iterations == sparse_problem.m
    assert trace.sq_errors[-1] < 0.1 * trace.sq_errors[0]
    assert np.all(np.diff(trace.alphas) < 0.0)


def test_solve_is_deterministic_per_seed(sparse_problem):
    policy = ConstantRate("constant")
    first = solve(sparse_problem, policy, seed=(5, 0, 1), k_max=100)
    again = solve(sparse_problem, policy, seed=(5, 0, 1), k_max=100)
    other = solve(sparse_problem, policy, seed=(5, 1, 1), k_max=100)
    assert np.array_equal(first.rows, again.rows)
    assert np.array_equal(first.x_final, again.x_final)
    assert not np.array_equal(first.rows, other.rows)
    assert len(set(first.rows.tolist())) == 100
    assert first.seed == [5, 0, 1]


def test_solve_in_order(sparse_problem):
    trace = solve(sparse_problem, ConstantRate("c"), sampler_kind="in-order", k_max=10)
    assert trace.rows.tolist() == list(range(10))
    assert trace.sampler == "in-order"


def test_solve_horizon_errors(sparse_problem):
    """Test that k_max > m and short explicit lists are rejected."""
    with pytest.raises(ParameterError) as exc_info:
        solve(sparse_problem, ConstantRate("c"), k_max=sparse_problem.m + 1)
    assert exc_info.value.code == ErrorCode.K_MAX_EXCEEDS_ROWS
    with pytest.raises(ParameterError):
        solve(sparse_problem, ConstantRate("c"), k_max=-1)
    with pytest.raises(ParameterError, match="lists 3 rates"):
        solve(sparse_problem, ExplicitRate("e", alphas=[1.0, 1.0, 1.0]), k_max=4)


def test_solve_with_explicit_rates_and_start(sparse_problem):
    alphas = [1.0, 0.5, 0.25, 0.0]
    x0 = np.ones(sparse_problem.n)
    trace = solve(sparse_problem, ExplicitRate("e", alphas=alphas), seed=2, k_max=4, x0=x0)
    assert trace.alphas.tolist() == alphas
    assert trace.sq_errors[0] == pytest.approx(float(np.sum((x0 - sparse_problem.x_true) ** 2)))
    assert trace.sq_errors[4] == trace.sq_errors[3]
    with pytest.raises(DimensionMismatchError):
        solve(sparse_problem, ConstantRate("c"), k_max=1, x0=np.ones(3))


def test_solve_zero_steps(sparse_problem):
    trace = solve(sparse_problem, ConstantRate("c"), k_max=0)
    assert trace.iterations == 0
    assert trace.sq_errors.tolist() == [float(np.sum(sparse_problem.x_true**2))]
    assert list(trace.records()) == [
        {"k": 0, "row": None, "alpha": None, "sq_error": trace.sq_errors[0], "residual": None}
    ]


def test_real_data_mode_records_residuals_only(sparse_problem):
    """Test that a problem without ground truth still solves."""
    p = Problem(A=sparse_problem.A, b_tilde=sparse_problem.b_tilde)
    trace = solve(p, ConstantRate("c"), seed=0, k_max=20)
    assert trace.sq_errors is None
    columns = trace.to_columns()
    assert len(columns["k"]) == 21
    assert all(v is None for v in columns["sq_error"])
    assert columns["residual"][:20] == trace.residuals.tolist()
    assert columns["residual"][20] is None


def test_step_identities_hold(sparse_problem, dense_problem):
    """Test both one-step identities to round-off for several rates."""
    rng = make_rng(12)
    for p in (sparse_problem, dense_problem):
        for alpha in (0.0, 0.3, 1.0, 1.7):
            for _ in range(25):
                i = int(rng.integers(p.m))
                x_k = p.x_true + rng.standard_normal(p.n)
                audit = step_identity_audit(p, x_k, i, alpha)
                assert audit.pythagorean_residual < 1e-10
                assert audit.decomposition_residual < 1e-10
                assert audit.sq_error_after == pytest.approx(
                    float(np.sum((audit.x_next - p.x_true) ** 2)), rel=1e-12
                )


def test_step_audit_noise_term(sparse_problem):
    """Test Z_k = ε²/‖a‖² at α = 1, Z_k = 0 at α = 0, and y on the clean hyperplane."""
    p = sparse_problem
    x_k = np.zeros(p.n)
    i = 7
    eps = float(p.b_tilde[i] - p.b[i])
    unit = step_identity_audit(p, x_k, i, 1.0)
    assert unit.z_k == pytest.approx(eps * eps / p.A.row_norm2[i], rel=1e-12)
    assert row_dot(p.A, i, unit.y_next) == pytest.approx(float(p.b[i]), rel=1e-10, abs=1e-12)
    still = step_identity_audit(p, x_k, i, 0.0)
    assert still.z_k == 0.0
    assert np.array_equal(still.x_next, x_k)
    exact = step_identity_audit(p, x_k, i, 0.5, b_tilde_i=float(p.b[i]))
    assert exact.z_k == 0.0


def test_step_audit_needs_ground_truth(sparse_problem):
    p = Problem(A=sparse_problem.A, b_tilde=sparse_problem.b_tilde)
    with pytest.raises(ParameterError, match="ground truth"):
        step_identity_audit(p, np.zeros(p.n), 0, 1.0)


def test_projection_terms(mixed_matrix):
    z = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    dense = mixed_matrix.to_dense()
    assert np.allclose(projection_terms(mixed_matrix, z), dense[:, 0] ** 2 / np.sum(dense**2, axis=1))


def test_empirical_eta_concentrates_on_one_over_n():
    """Test the weighted projection average ≈ 1/n on a dense sphere ensemble."""
    p = generate_problem(EnsembleSpec(kind="dense-sphere", m=5000, n=50, sigma=0.0, seed=21))
    n, m = p.n, p.m
    beta_var = 2.0 * (n - 1) / (n * n * (n + 2))
    se = np.sqrt(beta_var / m)
    eta_min = eta_of(p.A)
    rng = make_rng(99)
    deviations = []
    for _ in range(20):
        z = rng.standard_normal(n)
        z /= np.linalg.norm(z)
        value = empirical_eta(p.A, z)
        assert value >= eta_min * (1.0 - 1e-9)
        deviations.append(abs(value - 1.0 / n) / se)
    deviations = np.array(deviations)
    assert np.sum(deviations > 3.0) <= 1
    assert np.all(deviations <= 4.0)


def test_empirical_eta_validation(mixed_matrix):
    z = np.zeros(5)
    z[1] = 1.0
    assert empirical_eta(mixed_matrix, z, weights=np.ones(4)) == pytest.approx(
        float(np.mean(projection_terms(mixed_matrix, z)))
    )
    with pytest.raises(ParameterError, match="unit norm"):
        empirical_eta(mixed_matrix, 2.0 * z)
    with pytest.raises(DimensionMismatchError):
        empirical_eta(mixed_matrix, np.ones(3) / np.sqrt(3.0))
    with pytest.raises(DimensionMismatchError):
        empirical_eta(mixed_matrix, z, weights=np.ones(3))
    with pytest.raises(ParameterError):
        empirical_eta(mixed_matrix, z, weights=np.zeros(4))


def test_identity_rows_give_exact_eta():
    """Test that for orthonormal rows every unit z averages to exactly 1/n."""
    mat = RowMatrix.from_dense(np.eye(3))
    z = np.array([0.6, 0.0, 0.8])
    assert empirical_eta(mat, z) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_noise_term_mean_under_without_replacement_sampling():
    """Test E[Z_k] = α_k²σ² at a fixed step over 10⁴ independent noise draws."""
    spec = EnsembleSpec(kind="dense-sphere", m=12, n=4, sigma=0.1, seed=31)
    base = generate_problem(spec)
    alphas = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4]
    last = len(alphas) - 1
    samples = []
    for trial in range(10_000):
        noisy = generate_problem(spec.model_copy(update={"seed": 31 + 1 + trial}))
        p = Problem(A=base.A, b_tilde=base.b + noisy.noise, x_true=base.x_true, b=base.b, sigma=0.1)
        trace = solve(p, ExplicitRate("e", alphas=alphas[:last]), seed=(31, trial), k_max=last)
        rows_left = sorted(set(range(p.m)) - set(trace.rows.tolist()))
        i = rows_left[int(make_rng((31, trial, 9)).integers(len(rows_left)))]
        samples.append(step_identity_audit(p, trace.x_final, i, alphas[last]).z_k)
    samples = np.array(samples)
    se = samples.std(ddof=1) / np.sqrt(samples.size)
    assert abs(samples.mean() - alphas[last] ** 2 * 0.01) <= 3.0 * se
