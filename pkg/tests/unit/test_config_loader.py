"""
Unit tests for configuration loader.
"""

import json
from pathlib import Path

import pytest

from noisy_kaczmarz.common.errors import ConfigError
from noisy_kaczmarz.config_loader import (
    Beta0Config,
    ExperimentConfig,
    PolicyConfig,
    apply_overrides,
    default_experiment_config,
    dump_experiment_config,
    load_experiment_config,
    parse_experiment_config,
)

pytestmark = pytest.mark.unit

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


def test_minimal_config_defaults(small_experiment_data):
    """Test that omitted fields fall back to their defaults."""
    data = {"ensemble": small_experiment_data["ensemble"]}
    cfg = parse_experiment_config(data)
    assert cfg.trials == 20
    assert cfg.sampler == "weighted"
    assert cfg.format == "csv"
    assert [p.name for p in cfg.policies] == ["scheduled", "constant"]
    assert cfg.resolved_eta == pytest.approx(1.0 / 20)
    assert cfg.resolved_k_max == 200
    assert cfg.resolved_beta0 == pytest.approx(20 / 0.05**2)
    assert cfg.assumed_x0_err2 == 20.0


def test_explicit_beta0():
    cfg = parse_experiment_config(
        {
            "ensemble": {"kind": "dense-sphere", "m": 10, "n": 5, "sigma": 0.5},
            "beta0": {"mode": "explicit", "value": 8.0},
        }
    )
    assert cfg.resolved_beta0 == 8.0
    assert cfg.assumed_x0_err2 == pytest.approx(2.0)
    with pytest.raises(ValueError):
        Beta0Config(mode="explicit")


def test_noiseless_beta0_is_zero():
    cfg = parse_experiment_config({"ensemble": {"kind": "dense-sphere", "m": 10, "n": 5}})
    assert cfg.sigma2 == 0.0
    assert cfg.resolved_beta0 == 0.0


@pytest.mark.parametrize(
    "patch, message",
    [
        ({"k_max": 201}, "exceeds ensemble.m"),
        ({"trials": 0}, "trials"),
        ({"eta": 1.5}, "eta"),
        ({"sampler": "shuffled"}, "sampler"),
        ({"unknown_key": 1}, "unknown_key"),
        (
            {"policies": [{"name": "a", "type": "constant"}, {"name": "a", "type": "constant"}]},
            "duplicate policy names",
        ),
        ({"policies": [{"name": "a", "type": "warp"}]}, "unknown type 'warp'"),
        ({"policies": []}, "policies"),
    ],
)
def test_invalid_configs(small_experiment_data, patch, message):
    """Test that invalid documents raise ConfigError naming the problem."""
    with pytest.raises(ConfigError, match=message):
        parse_experiment_config({**small_experiment_data, **patch})


def test_policy_name_validation():
    with pytest.raises(ValueError, match="cannot be empty"):
        PolicyConfig(name="  ", type="constant")
    with pytest.raises(ValueError, match="path separators"):
        PolicyConfig(name="a/b", type="constant")
    assert PolicyConfig(name=" ok ", type="constant").name == "ok"


def test_load_shipped_configs():
    """Test that every config under config/ loads."""
    example = load_experiment_config(CONFIG_DIR / "sparse_sphere.json")
    assert example.ensemble.m == 2000 and example.ensemble.s == 10
    assert example.resolved_eta == 0.01
    assert example.master_seed == 2024
    trace = load_experiment_config(CONFIG_DIR / "sparse_sphere_trace.yaml")
    assert trace.single_trace and trace.format == "json"
    dense = load_experiment_config(CONFIG_DIR / "dense_sphere.yaml")
    assert dense.ensemble.kind == "dense-sphere"
    assert dense.resolved_beta0 == 5000.0


def test_load_yaml_and_json_agree(tmp_path, small_experiment_data):
    import yaml

    json_path = tmp_path / "exp.json"
    yaml_path = tmp_path / "exp.yaml"
    json_path.write_text(json.dumps(small_experiment_data))
    yaml_path.write_text(yaml.safe_dump(small_experiment_data))
    assert load_experiment_config(json_path) == load_experiment_config(yaml_path)


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_experiment_config(tmp_path / "missing.yaml")
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ConfigError, match="empty"):
        load_experiment_config(empty)
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_experiment_config(listing)
    broken = tmp_path / "broken.yaml"
    broken.write_text("ensemble: {m: [1, 2\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_experiment_config(broken)


def test_apply_overrides(small_experiment):
    """Test dotted overrides, skipped None values and re-validation."""
    updated = apply_overrides(
        small_experiment, {"trials": 2, "ensemble.sigma": 0.2, "k_max": None}
    )
    assert updated.trials == 2
    assert updated.ensemble.sigma == 0.2
    assert updated.k_max is None
    assert small_experiment.trials == 4
    with pytest.raises(ConfigError):
        apply_overrides(small_experiment, {"k_max": 10_000})


def test_default_config():
    cfg = default_experiment_config()
    assert isinstance(cfg, ExperimentConfig)
    assert (cfg.ensemble.m, cfg.ensemble.n, cfg.ensemble.s) == (2000, 100, 10)
    assert cfg.ensemble.sigma == 0.05
    assert cfg.resolved_eta == pytest.approx(0.01)


def test_dump_is_canonical(small_experiment):
    text = dump_experiment_config(small_experiment)
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert parse_experiment_config(data) == small_experiment
