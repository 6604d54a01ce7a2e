"""
Configuration-driven experiment loader.

An experiment is one YAML or JSON document (JSON is valid YAML, so both go
through ``yaml.safe_load``) mirroring ``ExperimentConfig`` field for field.
Command-line flags are merged on top with ``apply_overrides``.

Example:
    from noisy_kaczmarz.config_loader import load_experiment_config

    cfg = load_experiment_config("config/sparse_sphere.json")
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from noisy_kaczmarz.common.errors import ConfigError
from noisy_kaczmarz.common.logger import get_logger
from noisy_kaczmarz.generators import EnsembleSpec

logger = get_logger(__name__)

CONFIG_VERSION = "1.0"


class Beta0Config(BaseModel):
    """
    How β0 = ‖x - x0‖²/σ² is chosen.

    Attributes:
        mode: "explicit" uses ``value``; "heuristic-n" assumes ‖x - x0‖² = n.
        value: β0 for explicit mode.
    """

    model_config = ConfigDict(extra="forbid")

    mode: Literal["explicit", "heuristic-n"] = Field(default="heuristic-n")
    value: Optional[float] = Field(default=None, ge=0.0)

    @model_validator(mode="after")
    def validate_value(self) -> "Beta0Config":
        if self.mode == "explicit" and self.value is None:
            raise ValueError("beta0.mode 'explicit' needs beta0.value")
        return self


class PolicyConfig(BaseModel):
    """
    Configuration for a learning-rate policy.

    Attributes:
        name: Unique label, used in output file names.
        type: Registered policy type ("constant", "scheduled_optimal", "explicit"...).
        params: Policy-specific parameters (mu, alphas, or eta/sigma2/beta0 overrides).
    """

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="Unique policy label")
    type: str = Field(..., description="Policy type identifier")
    params: Dict[str, Any] = Field(default_factory=dict, description="Policy parameters")

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("policy name cannot be empty")
        if any(ch in v for ch in "/\\ "):
            raise ValueError(f"policy name '{v}' may not contain spaces or path separators")
        return v


def _default_policies() -> List[PolicyConfig]:
    return [
        PolicyConfig(name="scheduled", type="scheduled_optimal"),
        PolicyConfig(name="constant", type="constant", params={"mu": 1.0}),
    ]


class ExperimentConfig(BaseModel):
    """
    Declarative description of a multi-trial experiment.

    Attributes:
        version: Config schema version.
        name: Experiment name (logs, manifest).
        ensemble: Problem ensemble; its seed is replaced per trial.
        eta: Condition parameter η; defaults to 1/n.
        beta0: How β0 is chosen.
        policies: Policies compared on every trial.
        trials: Number of independent trials.
        k_max: Iterations per solve; defaults to m and may not exceed it.
        master_seed: Root of all per-trial seeds.
        sampler: "weighted" or "in-order" row selection.
        output: Output directory (falls back to the runtime default).
        format: "csv" or "json".
        single_trace: Also emit the per-step trace of trial 0.
        workers: Worker pool size (falls back to the runtime default).
    """

    model_config = ConfigDict(extra="forbid")

    version: str = Field(default=CONFIG_VERSION)
    name: str = Field(default="experiment")
    ensemble: EnsembleSpec
    eta: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    beta0: Beta0Config = Field(default_factory=Beta0Config)
    policies: List[PolicyConfig] = Field(default_factory=_default_policies, min_length=1)
    trials: int = Field(default=20, ge=1)
    k_max: Optional[int] = Field(default=None, ge=0)
    master_seed: int = Field(default=0, ge=0)
    sampler: Literal["weighted", "in-order"] = Field(default="weighted")
    output: Optional[str] = Field(default=None)
    format: Literal["csv", "json"] = Field(default="csv")
    single_trace: bool = Field(default=False)
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def validate_experiment(self) -> "ExperimentConfig":
        if self.k_max is not None and self.k_max > self.ensemble.m:
            raise ValueError(
                f"k_max = {self.k_max} exceeds ensemble.m = {self.ensemble.m} "
                "(rows are drawn without replacement)"
            )
        names = [p.name for p in self.policies]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate policy names: {duplicates}")

        from noisy_kaczmarz.policies.factory import RatePolicyFactory

        available = RatePolicyFactory.get_available_types()
        for policy in self.policies:
            if policy.type not in available:
                raise ValueError(
                    f"policy '{policy.name}' has unknown type '{policy.type}'. Available: {available}"
                )
        return self

    @property
    def resolved_eta(self) -> float:
        return self.eta if self.eta is not None else 1.0 / self.ensemble.n

    @property
    def resolved_k_max(self) -> int:
        return self.k_max if self.k_max is not None else self.ensemble.m

    @property
    def sigma2(self) -> float:
        return self.ensemble.sigma ** 2

    @property
    def resolved_beta0(self) -> float:
        if self.beta0.mode == "explicit":
            assert self.beta0.value is not None
            return self.beta0.value
        if self.sigma2 == 0.0:
            return 0.0
        return self.ensemble.n / self.sigma2

    @property
    def assumed_x0_err2(self) -> float:
        """‖x - x0‖² implied by the β0 choice (n under the heuristic)."""
        if self.beta0.mode == "heuristic-n":
            return float(self.ensemble.n)
        return self.resolved_beta0 * self.sigma2


def _format_validation_error(err: ValidationError) -> str:
    parts = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item.get("loc", ())) or "<root>"
        parts.append(f"{loc}: {item.get('msg')}")
    return "; ".join(parts)


def parse_experiment_config(data: Dict[str, Any], source: str = "<dict>") -> ExperimentConfig:
    """Validate a mapping, turning pydantic errors into ConfigError."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config {source}: {_format_validation_error(e)}") from e


def default_experiment_config() -> ExperimentConfig:
    """m = 2000, n = 100, s = 10, σ = 0.05, η = 1/n, β0 = n/σ², both built-in policies."""
    return parse_experiment_config(
        {
            "name": "sparse-sphere-default",
            "ensemble": {"kind": "sparse-sphere", "m": 2000, "n": 100, "s": 10, "sigma": 0.05},
        },
        source="<default>",
    )


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load an experiment from a YAML or JSON file.

    Raises:
        FileNotFoundError: the file does not exist.
        ConfigError: the file is empty, unparsable, or fails validation.
    """
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Experiment config not found: {path}")

    logger.info(f"Loading experiment config from: {config_path}")
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        logger.error(f"Failed to parse config file {path}: {e}")
        raise ConfigError(f"cannot parse {path}: {e}") from e

    if not data:
        raise ConfigError(f"config file {path} is empty")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping at top level")

    cfg = parse_experiment_config(data, source=str(path))
    logger.info(
        f"Loaded experiment '{cfg.name}': {cfg.trials} trials, "
        f"{len(cfg.policies)} policies, k_max={cfg.resolved_k_max}"
    )
    return cfg


def _set_dotted(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[keys[-1]] = value


def apply_overrides(cfg: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Return a re-validated copy of ``cfg`` with ``overrides`` applied.

    Keys may be dotted ("ensemble.sigma"); None values are skipped.
    """
    data = cfg.model_dump(mode="json")
    for key, value in overrides.items():
        if value is not None:
            _set_dotted(data, key, value)
    return parse_experiment_config(data, source="<overrides>")


def dump_experiment_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON rendering (sorted keys) used in run manifests."""
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True)
