"""
Base class for learning-rate policies.

A policy is an immutable description of how α_k is chosen. Each solve asks
it for a fresh ``rates()`` iterator, so one policy object can drive many
concurrent trials.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Iterator

from noisy_kaczmarz.common.logger import get_logger

logger = get_logger(__name__)


class BaseRatePolicy(ABC):
    """
    Abstract base class for learning-rate policies (Strategy Pattern).

    Subclasses must implement:
    - ``rates()``: yield α_0, α_1, ... for one run

    They may override ``check_horizon`` when they can only serve a limited
    number of iterations.
    """

    type_name: str = "base"

    def __init__(self, name: str, **kwargs: Any):
        """
        Args:
            name: Label used in output file names and logs.
            **kwargs: Extra context from the factory (eta, sigma2, beta0...);
                policies ignore what they do not need.
        """
        self.name = name
        logger.debug(f"Initialized rate policy: {name} ({self.type_name})")

    @abstractmethod
    def rates(self) -> Iterator[float]:
        """Fresh iterator over the learning rates of one run."""

    def check_horizon(self, k_max: int) -> None:
        """Raise if the policy cannot supply ``k_max`` rates."""

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "type": self.type_name}

    def __repr__(self) -> str:
        fields = ", ".join(f"{k}={v!r}" for k, v in self.describe().items())
        return f"{type(self).__name__}({fields})"
