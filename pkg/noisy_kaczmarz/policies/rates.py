"""
Built-in learning-rate policies: constant relaxation, the optimal schedule,
and an explicit list of rates.
"""

import itertools
import math
from typing import Any, Dict, Iterator, Optional, Sequence

from noisy_kaczmarz.common.errors import ParameterError
from noisy_kaczmarz.core.schedule import ScheduleParams, initial_state, schedule_step
from noisy_kaczmarz.policies.base import BaseRatePolicy


class ConstantRate(BaseRatePolicy):
    """α_k = μ for a fixed 0 < μ < 2 (μ = 1 is the plain Kaczmarz projection)."""

    type_name = "constant"

    def __init__(self, name: str, mu: float = 1.0, **kwargs: Any):
        super().__init__(name, **kwargs)
        mu = float(mu)
        if not (0.0 < mu < 2.0):
            raise ParameterError(f"constant rate mu must lie in (0, 2), got {mu}")
        self.mu = mu

    def rates(self) -> Iterator[float]:
        return itertools.repeat(self.mu)

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "mu": self.mu}


class ScheduledOptimalRate(BaseRatePolicy):
    """
    The optimal scheduled rate α_k = ηβ_k/(ηβ_k + 1), evaluated online.

    With σ² = 0 every rate is exactly 1.
    """

    type_name = "scheduled_optimal"

    def __init__(
        self,
        name: str,
        eta: Optional[float] = None,
        sigma2: Optional[float] = None,
        beta0: Optional[float] = None,
        params: Optional[ScheduleParams] = None,
        **kwargs: Any,
    ):
        super().__init__(name, **kwargs)
        if params is None:
            if eta is None or sigma2 is None or beta0 is None:
                raise ParameterError(
                    f"policy '{name}' needs eta, sigma2 and beta0 (or a ScheduleParams)"
                )
            params = ScheduleParams(eta=float(eta), sigma2=float(sigma2), beta0=float(beta0))
        self.params = params

    def rates(self) -> Iterator[float]:
        state = initial_state(self.params)
        while True:
            yield state.alpha_k
            state = schedule_step(state, self.params)

    def describe(self) -> Dict[str, Any]:
        return {
            **super().describe(),
            "eta": self.params.eta,
            "sigma2": self.params.sigma2,
            "beta0": self.params.beta0,
        }


class ExplicitRate(BaseRatePolicy):
    """A caller-supplied list of rates, one per iteration."""

    type_name = "explicit"

    def __init__(self, name: str, alphas: Optional[Sequence[float]] = None, **kwargs: Any):
        super().__init__(name, **kwargs)
        if alphas is None:
            raise ParameterError(f"policy '{name}' needs an 'alphas' list")
        values = tuple(float(a) for a in alphas)
        bad = [a for a in values if not math.isfinite(a)]
        if bad:
            raise ParameterError(f"policy '{name}' has non-finite rate {bad[0]}")
        self.alphas = values

    def rates(self) -> Iterator[float]:
        return iter(self.alphas)

    def check_horizon(self, k_max: int) -> None:
        if len(self.alphas) < k_max:
            raise ParameterError(
                f"policy '{self.name}' lists {len(self.alphas)} rates but {k_max} steps were requested"
            )

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "length": len(self.alphas)}
