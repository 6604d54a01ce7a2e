"""
Optimal learning-rate schedule for relaxed Kaczmarz under noise.

With β0 = ‖x - x0‖²/σ² the rate is

    α_k = ηβ_k / (ηβ_k + 1),    β_{k+1} = β_k (1 - ηα_k)

and E‖x - x_k‖² ≤ σ²β_k ≤ f(k) = σ² / (η W(e^{ηk + c})) with
c = 1/(ηβ0) - ln(ηβ0). Note f(0) = ‖x - x0‖² exactly.

All types are frozen value objects; state is advanced functionally.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import numpy.typing as npt

from noisy_kaczmarz.common.errors import DomainError, ErrorCode, ParameterError
from noisy_kaczmarz.core.lambert_w import lambert_w_exp, lambert_w_exp_array

FloatArray = npt.NDArray[np.float64]


def _check_eta(eta: float) -> None:
    if not (0.0 < eta <= 1.0):
        raise ParameterError(f"eta must lie in (0, 1], got {eta}")


def _check_nonnegative(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0.0:
        raise ParameterError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class ScheduleParams:
    """
    Hyperparameters of the schedule.

    Attributes:
        eta: Condition parameter η = κ(A)^-2, in (0, 1].
        sigma2: Noise variance σ².
        beta0: Signal-to-noise ratio ‖x - x0‖²/σ².
    """

    eta: float
    sigma2: float
    beta0: float

    def __post_init__(self) -> None:
        _check_eta(self.eta)
        _check_nonnegative("sigma2", self.sigma2)
        _check_nonnegative("beta0", self.beta0)

    @classmethod
    def from_error(cls, eta: float, sigma2: float, x0_err2: float) -> "ScheduleParams":
        """Build params from ‖x - x0‖² instead of β0 (β0 is 0 when σ² = 0)."""
        _check_nonnegative("x0_err2", x0_err2)
        beta0 = x0_err2 / sigma2 if sigma2 > 0.0 else 0.0
        return cls(eta=eta, sigma2=sigma2, beta0=beta0)

    @property
    def noiseless(self) -> bool:
        return self.sigma2 == 0.0


@dataclass(frozen=True)
class ScheduleState:
    k: int
    beta_k: float
    alpha_k: float

    @classmethod
    def initial(cls, params: ScheduleParams) -> "ScheduleState":
        return initial_state(params)


def _alpha_of(beta: float, params: ScheduleParams) -> float:
    if params.noiseless:
        return 1.0
    eb = params.eta * beta
    return eb / (eb + 1.0)


def initial_state(params: ScheduleParams) -> ScheduleState:
    """State at k = 0."""
    beta0 = 0.0 if params.noiseless else params.beta0
    return ScheduleState(k=0, beta_k=beta0, alpha_k=_alpha_of(beta0, params))


def schedule_step(state: ScheduleState, params: ScheduleParams) -> ScheduleState:
    """
    Advance the recursion by one iteration.

    The returned state holds β_{k+1} and the rate α_{k+1} to use at the next
    step. Without noise α stays 1 and β stays 0.
    """
    if params.noiseless:
        return ScheduleState(k=state.k + 1, beta_k=0.0, alpha_k=1.0)
    beta_next = state.beta_k * (1.0 - params.eta * state.alpha_k)
    return ScheduleState(k=state.k + 1, beta_k=beta_next, alpha_k=_alpha_of(beta_next, params))


@dataclass(frozen=True)
class ScheduleTable:
    """Arrays k, α_k, β_k for k = 0..k_max."""

    k: npt.NDArray[np.int64]
    alpha: FloatArray
    beta: FloatArray
    sigma2: float

    @property
    def sigma2_beta(self) -> FloatArray:
        return self.sigma2 * self.beta

    def __len__(self) -> int:
        return int(self.k.shape[0])


def iterate_schedule(params: ScheduleParams, k_max: int) -> ScheduleTable:
    """Run the recursion from k = 0 to k_max inclusive."""
    if k_max < 0:
        raise ParameterError(f"k_max must be >= 0, got {k_max}")
    alpha = np.empty(k_max + 1)
    beta = np.empty(k_max + 1)
    if params.noiseless:
        alpha.fill(1.0)
        beta.fill(0.0)
    else:
        # Same recursion as schedule_step, on plain floats
        eta = params.eta
        b = params.beta0
        for k in range(k_max + 1):
            a = _alpha_of(b, params)
            alpha[k] = a
            beta[k] = b
            b = b * (1.0 - eta * a)
    return ScheduleTable(
        k=np.arange(k_max + 1, dtype=np.int64), alpha=alpha, beta=beta, sigma2=params.sigma2
    )


@dataclass(frozen=True)
class BoundParams:
    """
    Constants of the closed-form bound f.

    Attributes:
        c: 1/(ηβ0) - ln(ηβ0); +inf when ‖x - x0‖² = 0 or σ² = 0.
        eta: η.
        sigma2: σ².
        x0_err2: ‖x - x0‖².
    """

    c: float
    eta: float
    sigma2: float
    x0_err2: float

    @classmethod
    def create(cls, eta: float, sigma2: float, x0_err2: float) -> "BoundParams":
        _check_eta(eta)
        _check_nonnegative("sigma2", sigma2)
        _check_nonnegative("x0_err2", x0_err2)
        if sigma2 == 0.0 or x0_err2 == 0.0:
            return cls(c=math.inf, eta=eta, sigma2=sigma2, x0_err2=x0_err2)
        r = eta * x0_err2 / sigma2
        return cls(c=1.0 / r - math.log(r), eta=eta, sigma2=sigma2, x0_err2=x0_err2)

    @classmethod
    def from_schedule(cls, params: ScheduleParams) -> "BoundParams":
        return cls.create(params.eta, params.sigma2, params.sigma2 * params.beta0)


def _require_noise(bp: BoundParams) -> None:
    if bp.sigma2 == 0.0:
        raise DomainError(
            "the bound degenerates at sigma2 = 0; use asymptote_small_sigma instead",
            code=ErrorCode.BOUND_DEGENERATE,
        )


def bound_f(k: float, bp: BoundParams) -> float:
    """
    f(k) = σ² / (η W(e^{ηk + c})).

    k may be real so the same routine gives f(t) for the continuous rate.
    """
    _require_noise(bp)
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    if math.isinf(bp.c):
        return 0.0
    w = lambert_w_exp(bp.eta * k + bp.c)
    return bp.sigma2 / (bp.eta * w)


def bound_curve(ks: Union[Sequence[float], npt.ArrayLike], bp: BoundParams) -> FloatArray:
    """Vectorized ``bound_f``."""
    _require_noise(bp)
    k_arr = np.asarray(ks, dtype=np.float64)
    if np.any(k_arr < 0):
        raise ParameterError("k must be >= 0")
    if math.isinf(bp.c):
        return np.zeros_like(k_arr)
    w = lambert_w_exp_array(bp.eta * k_arr + bp.c)
    return bp.sigma2 / (bp.eta * w)


def continuous_alpha(t: float, bp: BoundParams) -> float:
    """α(t) = ηf(t) / (ηf(t) + σ²)."""
    ef = bp.eta * bound_f(t, bp)
    return ef / (ef + bp.sigma2)


def continuous_alpha_curve(ts: npt.ArrayLike, bp: BoundParams) -> FloatArray:
    ef = bp.eta * bound_curve(ts, bp)
    return ef / (ef + bp.sigma2)


def ode_solution(t: float, u0: float) -> float:
    """
    Solution of u' = -u²/(u + 1), u(0) = u0, namely u(t) = 1/W(e^{t + c})
    with c = 1/u0 - ln u0. Then f(k) = (σ²/η)·u(ηk).
    """
    if not (u0 > 0.0) or not math.isfinite(u0):
        raise ParameterError(f"u0 must be positive and finite, got {u0}")
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    return 1.0 / lambert_w_exp(t + 1.0 / u0 - math.log(u0))


def asymptote_small_sigma(k: float, eta: float, x0_err2: float) -> float:
    """e^{-ηk}‖x - x0‖², the σ → 0 limit of f."""
    _check_eta(eta)
    if not (x0_err2 > 0.0):
        raise ParameterError(f"x0_err2 must be > 0, got {x0_err2}")
    return math.exp(-eta * k) * x0_err2


def asymptote_large_k(k: float, eta: float, sigma2: float) -> float:
    """σ²/(η²k), the k → ∞ limit of f."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    _check_eta(eta)
    _check_nonnegative("sigma2", sigma2)
    return sigma2 / (eta * eta * k)


def needell_horizon(delta: float, eta: float) -> float:
    """δ²/η, the error floor of the α = 1 iteration under noise bounded by δ."""
    _check_nonnegative("delta", delta)
    _check_eta(eta)
    return delta * delta / eta


def needell_curve(k: float, eta: float, delta: float, x0_err2: float) -> float:
    """(1 - η)^k‖x - x0‖² + δ²/η."""
    _check_nonnegative("x0_err2", x0_err2)
    return (1.0 - eta) ** k * x0_err2 + needell_horizon(delta, eta)


def schedule_error_bound(alphas: Sequence[float], eta: float, beta0: float) -> FloatArray:
    """
    Normalized error bound of an arbitrary scheduled rate sequence.

    g_0 = β0 and g_{k+1} = (1 - (2α_k - α_k²)η) g_k + α_k²; σ²·g_k bounds
    E‖x - x_k‖². The optimal schedule makes g_k equal to β_k, the minimum.
    """
    _check_eta(eta)
    _check_nonnegative("beta0", beta0)
    g = np.empty(len(alphas) + 1)
    g[0] = beta0
    for k, a in enumerate(alphas):
        g[k + 1] = (1.0 - (2.0 * a - a * a) * eta) * g[k] + a * a
    return g


def optimality_recursion_check(params: ScheduleParams, k_max: int) -> float:
    """
    Run the unsimplified and simplified recursions side by side.

    Returns:
        The largest relative discrepancy between the two β sequences over k <= k_max.
    """
    if params.noiseless:
        raise ParameterError("optimality_recursion_check needs sigma2 > 0")
    if k_max < 0:
        raise ParameterError(f"k_max must be >= 0, got {k_max}")
    eta = params.eta
    beta_s = params.beta0
    beta_u = params.beta0
    worst = 0.0
    for _ in range(k_max):
        alpha_s = _alpha_of(beta_s, params)
        alpha_u = _alpha_of(beta_u, params)
        beta_s = beta_s * (1.0 - eta * alpha_s)
        beta_u = (1.0 - (2.0 * alpha_u - alpha_u * alpha_u) * eta) * beta_u + alpha_u * alpha_u
        scale = max(abs(beta_s), abs(beta_u))
        if scale > 0.0:
            worst = max(worst, abs(beta_u - beta_s) / scale)
    return worst
