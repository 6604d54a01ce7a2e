"""
Rate-policy factory with entry point discovery.

Third-party packages can contribute policies through the
"noisy_kaczmarz.rate_policies" entry point group.
"""

from importlib.metadata import entry_points
from typing import Any, Dict, List, Type

from noisy_kaczmarz.common.errors import ConfigError, ErrorCode
from noisy_kaczmarz.common.logger import get_logger
from noisy_kaczmarz.config_loader import PolicyConfig
from noisy_kaczmarz.policies.base import BaseRatePolicy

logger = get_logger(__name__)

ENTRY_POINT_GROUP = "noisy_kaczmarz.rate_policies"


class RatePolicyFactory:
    """
    Factory for creating policy instances from configuration.

    Uses entry points (group: "noisy_kaczmarz.rate_policies") to discover
    available policies at runtime.
    """

    _policy_classes: Dict[str, Type[BaseRatePolicy]] = {}
    _loaded: bool = False

    @classmethod
    def _load_entry_points(cls) -> None:
        if cls._loaded:
            return

        try:
            for ep in entry_points(group=ENTRY_POINT_GROUP):
                try:
                    policy_class = ep.load()
                    if not isinstance(policy_class, type) or not issubclass(policy_class, BaseRatePolicy):
                        logger.warning(
                            f"Policy entry point '{ep.name}' ignored: not a BaseRatePolicy subclass"
                        )
                        continue
                    cls._policy_classes[ep.name] = policy_class
                    logger.debug(f"Loaded policy entry point: {ep.name} -> {policy_class.__name__}")
                except Exception as e:
                    logger.warning(f"Failed to load policy entry point '{ep.name}': {e}")
        except Exception as e:
            logger.error(f"Failed to load policy entry points: {e}", exc_info=True)
        # Built-ins are always available, also when running from a source tree
        cls._register_builtin_policies()
        cls._loaded = True

    @classmethod
    def _register_builtin_policies(cls) -> None:
        from noisy_kaczmarz.policies.rates import ConstantRate, ExplicitRate, ScheduledOptimalRate

        for policy_class in (ConstantRate, ScheduledOptimalRate, ExplicitRate):
            cls._policy_classes.setdefault(policy_class.type_name, policy_class)

    @classmethod
    def register(cls, policy_type: str, policy_class: Type[BaseRatePolicy]) -> None:
        """
        Register a new policy type.

        Args:
            policy_type: Type identifier string.
            policy_class: Policy class to register.
        """
        cls._load_entry_points()
        cls._policy_classes[policy_type] = policy_class
        logger.debug(f"Registered policy type: {policy_type} -> {policy_class.__name__}")

    @classmethod
    def create(cls, config: PolicyConfig, **context: Any) -> BaseRatePolicy:
        """
        Create a policy instance from configuration.

        Args:
            config: PolicyConfig instance.
            **context: Experiment-level values (eta, sigma2, beta0) used when
                ``config.params`` does not set them.

        Raises:
            ConfigError: unknown policy type.
        """
        cls._load_entry_points()
        policy_class = cls._policy_classes.get(config.type)
        if policy_class is None:
            raise ConfigError(
                f"Unknown policy type '{config.type}' for '{config.name}'. "
                f"Available: {sorted(cls._policy_classes)}",
                code=ErrorCode.UNKNOWN_POLICY,
            )
        kwargs = {**context, **config.params}
        policy = policy_class(name=config.name, **kwargs)
        logger.debug(f"Created policy: {policy}")
        return policy

    @classmethod
    def get_available_types(cls) -> List[str]:
        cls._load_entry_points()
        return sorted(cls._policy_classes)
