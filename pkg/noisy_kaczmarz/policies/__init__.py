"""
Learning-rate policies for the relaxed Kaczmarz iteration.
"""

from noisy_kaczmarz.policies.base import BaseRatePolicy
from noisy_kaczmarz.policies.rates import ConstantRate, ExplicitRate, ScheduledOptimalRate

__all__ = [
    "BaseRatePolicy",
    "ConstantRate",
    "ExplicitRate",
    "ScheduledOptimalRate",
]
