"""
Tests for experiment configuration loading and manifests.
"""

from pathlib import Path

import pytest
import yaml

from betagan.config import (
    ExperimentConfig,
    flatten,
    load_config,
    parse_config,
    read_manifest_metadata,
    unflatten,
    write_manifest,
)
from betagan.models import ConfigError, TrainingMode

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"


class TestKeyForms:
    """Test nested, dotted and mixed key layouts."""

    def test_nested(self):
        config = parse_config({"dataset": {"layout": "mog5"}, "schedule": {"beta1": 0.2, "betaK": 5.0, "K": 4}})
        assert config.schedule.K == 4
        assert config.build_schedule().beta_1 == 0.2

    def test_dotted(self):
        config = parse_config({"dataset.layout": "ring8", "trainer.m": 32, "seed": 3})
        assert config.dataset.layout == "ring8"
        assert config.trainer.m == 32
        assert config.build_trainer_config().seed == 3

    def test_mixed(self):
        config = parse_config({"dataset": {"layout": "line4"}, "dataset.n_points": 200, "trainer": {"n": 10}})
        assert config.dataset.n_points == 200
        assert config.trainer.n == 10

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            unflatten({"trainer": {"m": 8}, "trainer.m": 16})

    def test_scalar_conflict(self):
        with pytest.raises(ConfigError):
            unflatten({"trainer": 3, "trainer.m": 16})

    def test_flatten_sorts(self):
        assert list(flatten({"b": {"y": 1, "x": 2}, "a": 0})) == ["a", "b.x", "b.y"]


class TestValidation:
    """Test that bad configurations surface as ConfigError."""

    def test_defaults(self):
        config = parse_config({"dataset": {"layout": "mog5"}})
        trainer = config.build_trainer_config()
        assert (trainer.m, trainer.n, trainer.lr_d, trainer.lr_g) == (64, 500, 0.05, 0.05)
        assert trainer.n_final == 500
        assert config.mode is TrainingMode.BETA_GAN

    @pytest.mark.parametrize(
        "data",
        [
            {"dataset": {"layout": "spiral"}},
            {"dataset": {"layout": "mog5", "path": "data.csv"}},
            {"dataset": {}},
            {"dataset": {"layout": "mog5"}, "schedule": {"beta1": 10.0, "betaK": 0.1}},
            {"dataset": {"layout": "mog5"}, "schedule": {"betaK": float("nan")}},
            {"dataset": {"layout": "mog5"}, "schedule.betaK": float("inf")},
            {"dataset": {"layout": "mog5"}, "trainer": {"m": 0}},
            {"dataset": {"layout": "mog5"}, "trainer": {"optimizer": "rmsprop"}},
            {"dataset": {"layout": "mog5"}, "unknown": 1},
            {"dataset": {"layout": "mog5"}, "networks": {"latent_dim": 2}},
            {"dataset": {"layout": "mog5"}, "stage_samples": 20_000},
        ],
    )
    def test_invalid(self, data):
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_smooth_generator_needs_override(self):
        data = {"dataset": {"layout": "mog5"}, "networks": {"generator": "tanh 64 | tanh 64"}}
        with pytest.raises(ConfigError) as excinfo:
            parse_config(data)
        assert "frozen noise" in str(excinfo.value)
        data["networks"]["allow_smooth_hidden"] = True
        assert parse_config(data).networks.allow_smooth_hidden

    def test_error_names_the_field(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config({"dataset": {"layout": "mog5"}, "trainer": {"m": "many"}})
        assert "trainer.m" in str(excinfo.value)

    def test_empty_and_non_mapping(self):
        with pytest.raises(ConfigError):
            parse_config(None)
        with pytest.raises(ConfigError):
            parse_config([1, 2])

    def test_output_heads_follow_data_dimension(self):
        config = parse_config({"dataset": {"layout": "mog5"}, "networks": {"generator": "relu 16"}})
        assert config.build_generator_spec(3).describe() == "G:[z(3) | ReLU(16) | Linear(3)]"
        assert config.build_discriminator_spec(3).output_dim == 1


class TestFiles:
    """Test YAML loading and manifest round trips."""

    def test_load(self, tmp_path):
        path = tmp_path / "experiment.yaml"
        path.write_text("dataset:\n  layout: cubes\nschedule.K: 5\n")
        config = load_config(path)
        assert config.dataset.layout == "cubes"
        assert config.schedule.K == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.yaml")

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("dataset: [unclosed\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_manifest_round_trip(self, tmp_path):
        config = parse_config({"dataset": {"layout": "ring8"}, "trainer": {"n": 7}, "seed": 11, "mode": "vanilla"})
        path = write_manifest(config, tmp_path / "run" / "manifest.yaml", {"status": "complete", "tau": 42})
        assert load_config(path) == config
        assert read_manifest_metadata(path) == {"status": "complete", "tau": 42}

    def test_manifest_keys_sorted_and_dotted(self, tmp_path):
        config = parse_config({"dataset": {"layout": "mog5"}})
        path = write_manifest(config, tmp_path / "manifest.yaml")
        keys = list(yaml.safe_load(path.read_text()))
        assert keys == sorted(keys)
        assert "schedule.beta1" in keys
        assert all("." in key for key in keys if key not in ExperimentConfig.model_fields)


class TestOverrides:
    """Test command-line overrides."""

    def setup_method(self):
        self.config = parse_config({"dataset": {"layout": "mog5"}, "seed": 1})

    def test_override_values(self):
        updated = self.config.with_overrides(seed=9, out="elsewhere", mode="vanilla")
        assert (updated.seed, updated.out, updated.mode) == (9, "elsewhere", TrainingMode.VANILLA)
        assert updated.build_trainer_config().seed == 9

    def test_none_leaves_values(self):
        assert self.config.with_overrides() == self.config


class TestShippedExperiments:
    """The example experiment files stay valid."""

    @pytest.mark.parametrize("name", ["mog5.yaml", "mog10.yaml", "cubes.yaml"])
    def test_loads(self, name):
        config = load_config(EXPERIMENTS / name)
        assert config.schedule.K == 20
        assert config.build_discriminator_spec(3).describe().endswith("Sigmoid(1)]")
