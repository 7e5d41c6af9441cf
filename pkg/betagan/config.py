"""
Experiment configuration.

Experiment files are YAML. Keys may be nested sections or flat dotted keys
(``schedule.beta1: 0.1``) and both forms may be mixed in one file. Every run
writes a manifest holding the resolved configuration as sorted dotted keys;
a manifest loads back as a config that reproduces the run.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .models import (
    Activation,
    BetaGanError,
    BoxDomain,
    ConfigError,
    ConstraintError,
    ContractError,
    LatentPrior,
    LayerSpec,
    MlpSpec,
    NetworkRole,
    TrainerConfig,
    TrainingMode,
)
from .networks import parse_layers, validate_spec
from .schedule import AnnealingSchedule, make_schedule
from .synthetic import LAYOUTS, layout_dim, make_layout

logger = logging.getLogger("betagan.config")

MAX_STAGE_SAMPLES = 10_000
RUN_SECTION = "run"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSection(_Section):
    """Either a named synthetic layout or a CSV file, never both."""
    layout: Optional[str] = None
    path: Optional[str] = None
    n_points: int = Field(default=10_000, ge=1)
    seed: int = 0
    rescale: bool = True

    @field_validator("layout")
    @classmethod
    def _known_layout(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in LAYOUTS:
            raise ValueError(f"unknown layout '{value}', choose from {sorted(LAYOUTS)}")
        return value

    @model_validator(mode="after")
    def _one_source(self) -> "DatasetSection":
        if (self.layout is None) == (self.path is None):
            raise ValueError("exactly one of dataset.layout and dataset.path must be set")
        return self


class BoxSection(_Section):
    low: float = -1.0
    high: float = 1.0

    @model_validator(mode="after")
    def _ordered(self) -> "BoxSection":
        if not self.low < self.high:
            raise ValueError(f"box.low must be below box.high, got [{self.low}, {self.high}]")
        return self


class NetworkSection(_Section):
    """Hidden layers as 'relu 128 | relu 128'; output heads are added from the data dimension."""
    generator: str = "relu 128 | relu 128"
    discriminator: str = "relu 128 | relu 128"
    latent_dim: Optional[int] = Field(default=None, ge=1)
    allow_smooth_hidden: bool = False

    @field_validator("generator", "discriminator")
    @classmethod
    def _parses(cls, value: str) -> str:
        try:
            parse_layers(value)
        except ContractError as e:
            raise ValueError(str(e))
        return value


class ScheduleSection(_Section):
    beta1: float = 0.1
    betaK: float = 10.0
    K: int = 20


class TrainerSection(_Section):
    m: int = 64
    n: int = 500
    n_pretrain: int = 20_000
    n_final: Optional[int] = None
    lr_d: float = 0.05
    lr_g: float = 0.05
    d_steps: int = 1
    optimizer: str = "sgd"
    momentum: float = 0.9
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    pretrain_check_every: int = 1000
    pretrain_eval_samples: int = 10_000
    ks_threshold: float = 0.05
    correlation_threshold: float = 0.1
    frozen_noise_threshold: float = 0.5


class ExperimentConfig(_Section):
    """Everything one training run needs."""
    dataset: DatasetSection
    box: BoxSection = Field(default_factory=BoxSection)
    networks: NetworkSection = Field(default_factory=NetworkSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    trainer: TrainerSection = Field(default_factory=TrainerSection)
    seed: int = 0
    mode: TrainingMode = TrainingMode.BETA_GAN
    out: str = "runs/experiment"
    stage_samples: int = Field(default=MAX_STAGE_SAMPLES, ge=1, le=MAX_STAGE_SAMPLES)
    tau_budget: Optional[int] = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _cross_fields(self) -> "ExperimentConfig":
        try:
            self.build_schedule()
            self.build_trainer_config()
            if self.dataset.layout is not None:
                self.check_architecture(layout_dim(make_layout(self.dataset.layout)))
        except BetaGanError as e:
            raise ValueError(str(e))
        return self

    def check_architecture(self, dim: int) -> None:
        """Network specs and latent width must suit data of dimension dim."""
        self.build_generator_spec(dim)
        self.build_discriminator_spec(dim)
        latent = self.build_prior(dim).dim
        if latent < dim:
            raise ConstraintError(f"Latent dimension {latent} is smaller than data dimension {dim}")

    def build_schedule(self) -> AnnealingSchedule:
        return make_schedule(self.schedule.beta1, self.schedule.betaK, self.schedule.K)

    def build_trainer_config(self) -> TrainerConfig:
        return TrainerConfig(seed=self.seed, baseline_mode=self.mode, **self.trainer.model_dump())

    def build_box(self, dim: int) -> BoxDomain:
        return BoxDomain(low=self.box.low, high=self.box.high, dim=dim)

    def build_prior(self, dim: int) -> LatentPrior:
        return LatentPrior(dim=self.networks.latent_dim or dim)

    def build_generator_spec(self, dim: int) -> MlpSpec:
        layers = parse_layers(self.networks.generator) + (LayerSpec(dim, Activation.LINEAR),)
        spec = MlpSpec(
            input_dim=self.build_prior(dim).dim,
            layers=layers,
            role=NetworkRole.GENERATOR,
            allow_smooth_hidden=self.networks.allow_smooth_hidden,
        )
        validate_spec(spec)
        return spec

    def build_discriminator_spec(self, dim: int) -> MlpSpec:
        layers = parse_layers(self.networks.discriminator) + (LayerSpec(1, Activation.SIGMOID),)
        spec = MlpSpec(input_dim=dim, layers=layers, role=NetworkRole.DISCRIMINATOR)
        validate_spec(spec)
        return spec

    def with_overrides(
        self,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        mode: Optional[Union[str, TrainingMode]] = None,
    ) -> "ExperimentConfig":
        """Apply command-line overrides; None leaves a value untouched."""
        update: Dict[str, Any] = {}
        if seed is not None:
            update["seed"] = seed
        if out is not None:
            update["out"] = str(out)
        if mode is not None:
            update["mode"] = TrainingMode(mode)
        return self.model_copy(update=update)

    def flatten(self) -> Dict[str, Any]:
        return flatten(self.model_dump(mode="json"))


def unflatten(data: Mapping[str, Any]) -> Dict[str, Any]:
    """Expand dotted keys into nested sections, merging with nested ones."""
    result: Dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, Mapping):
            value = unflatten(value)
        parts = str(key).split(".")
        node = result
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Key '{key}' conflicts with scalar value at '{part}'")
            node = child
        leaf = parts[-1]
        if isinstance(value, dict) and isinstance(node.get(leaf), dict):
            node[leaf].update(value)
        elif leaf in node:
            raise ConfigError(f"Duplicate configuration key '{key}'")
        else:
            node[leaf] = value
    return result


def flatten(data: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested sections to sorted dotted keys."""
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return dict(sorted(flat.items()))


def parse_config(data: Optional[Mapping[str, Any]]) -> ExperimentConfig:
    """Validate raw (nested, dotted or mixed) config data."""
    if data is None:
        raise ConfigError("Configuration is empty")
    if not isinstance(data, Mapping):
        raise ConfigError(f"Configuration must be a mapping, got {type(data).__name__}")
    nested = unflatten(data)
    nested.pop(RUN_SECTION, None)
    try:
        return ExperimentConfig.model_validate(nested)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {problems}")


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a YAML experiment file (or a manifest)."""
    config_path = Path(path)
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config {config_path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed YAML in {config_path}: {e}")
    config = parse_config(data)
    logger.debug(f"Loaded config from {config_path}")
    return config


def write_manifest(
    config: ExperimentConfig,
    path: Union[str, Path],
    metadata: Optional[Mapping[str, Any]] = None,
) -> Path:
    """Resolved config as sorted dotted keys plus run metadata under 'run.'."""
    entries = config.flatten()
    for key, value in (metadata or {}).items():
        entries[f"{RUN_SECTION}.{key}"] = value
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(dict(sorted(entries.items())), f, sort_keys=True, default_flow_style=False)
    return out_path


def read_manifest_metadata(path: Union[str, Path]) -> Dict[str, Any]:
    with open(Path(path), "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    prefix = f"{RUN_SECTION}."
    return {key[len(prefix):]: value for key, value in data.items() if str(key).startswith(prefix)}
