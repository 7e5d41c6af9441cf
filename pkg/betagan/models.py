"""
Core data models for betagan.

This module defines the fundamental data structures used throughout the system:
- The ambient box, datasets and inverse temperatures
- Network specifications and the latent prior
- Trainer configuration and training traces
- Diagnostic reports and the exception hierarchy
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


class Activation(Enum):
    """Activation tags understood by the autodiff core."""
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    LINEAR = "linear"


class NetworkRole(Enum):
    """Role a network plays in the adversarial game."""
    GENERATOR = "generator"
    DISCRIMINATOR = "discriminator"


class TrainingMode(Enum):
    """Which training procedure an experiment runs."""
    BETA_GAN = "beta_gan"
    VANILLA = "vanilla"


class GeneratorLoss(Enum):
    """Generator objective form recorded in trace metadata."""
    SATURATING = "saturating"          # log(1 - D(G(z)))
    NON_SATURATING = "non_saturating"  # -log D(G(z))


class TemperatureKind(Enum):
    """The three regimes of the inverse temperature."""
    UNIFORM = "uniform"
    FINITE = "finite"
    INFINITY = "infinity"


class BetaGanError(Exception):
    """Base exception for betagan errors."""
    pass


class DimensionError(BetaGanError, ValueError):
    """Exception raised when array shapes do not line up."""
    pass


class ContractError(BetaGanError, ValueError):
    """Exception raised when a precondition is violated."""
    pass


class ConstraintError(BetaGanError, ValueError):
    """Exception raised when a network violates an architecture constraint."""
    pass


class ConfigError(BetaGanError):
    """Exception raised for invalid experiment configuration."""
    pass


class DataFormatError(BetaGanError):
    """Exception raised when a data file cannot be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class CheckpointError(BetaGanError):
    """Exception raised when a checkpoint cannot be written or read."""
    pass


class TrainingFault(BetaGanError):
    """Exception raised when training produces a non-finite loss."""

    def __init__(self, message: str, trace: Optional["TrainingTrace"] = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class BoxDomain:
    """The finite ambient box [low, high]^dim hosting every distribution."""
    low: float = -1.0
    high: float = 1.0
    dim: int = 1

    def __post_init__(self) -> None:
        """Validate box geometry."""
        if not self.low < self.high:
            raise ContractError(f"Box requires low < high, got [{self.low}, {self.high}]")
        if self.dim < 1:
            raise ContractError(f"Box dimension must be positive, got {self.dim}")

    @property
    def width(self) -> float:
        """Edge length of the box."""
        return self.high - self.low

    @property
    def midpoint(self) -> float:
        """Center coordinate shared by every axis."""
        return 0.5 * (self.low + self.high)

    def contains(self, points: np.ndarray) -> bool:
        """Check whether every row of points lies inside the box."""
        points = np.asarray(points, dtype=np.float64)
        return bool(np.all(points >= self.low) and np.all(points <= self.high))

    def with_dim(self, dim: int) -> "BoxDomain":
        """Same interval, different dimension."""
        return BoxDomain(low=self.low, high=self.high, dim=dim)


@dataclass(frozen=True)
class RescaleTransform:
    """Per-dimension affine map x -> x * scale + offset."""
    scale: Tuple[float, ...]
    offset: Tuple[float, ...]
    raw_low: Tuple[float, ...] = ()

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map raw coordinates into box coordinates."""
        return np.asarray(points, dtype=np.float64) * np.asarray(self.scale) + np.asarray(self.offset)

    def invert(self, points: np.ndarray) -> np.ndarray:
        """Map box coordinates back to raw coordinates; constant axes return their raw value."""
        points = np.asarray(points, dtype=np.float64)
        scale = np.asarray(self.scale)
        offset = np.asarray(self.offset)
        constant = scale == 0
        raw = (points - offset) / np.where(constant, 1.0, scale)
        if np.any(constant):
            fill = np.asarray(self.raw_low) if self.raw_low else np.zeros_like(scale)
            raw = np.where(constant, fill, raw)
        return raw

    def to_dict(self) -> Dict[str, List[float]]:
        return {"scale": list(self.scale), "offset": list(self.offset), "raw_low": list(self.raw_low)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RescaleTransform":
        return cls(
            scale=tuple(float(v) for v in data["scale"]),
            offset=tuple(float(v) for v in data["offset"]),
            raw_low=tuple(float(v) for v in data.get("raw_low", ())),
        )


@dataclass
class Dataset:
    """N observations inside the box; the atoms of the empirical distribution."""
    points: np.ndarray
    box: BoxDomain
    transform: Optional[RescaleTransform] = None

    def __post_init__(self) -> None:
        """Validate dataset contents."""
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ContractError(f"Dataset needs an N x d matrix with N >= 1, got shape {self.points.shape}")
        if self.points.shape[1] != self.box.dim:
            raise DimensionError(
                f"Dataset has {self.points.shape[1]} columns but box dimension is {self.box.dim}"
            )
        if not self.box.contains(self.points):
            raise ContractError(f"Dataset points fall outside [{self.box.low}, {self.box.high}]^{self.box.dim}")

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


@dataclass(frozen=True)
class InverseTemperature:
    """Inverse temperature beta: UNIFORM (beta=0), a finite positive value, or INFINITY."""
    kind: TemperatureKind
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind is TemperatureKind.FINITE and not (self.value > 0 and math.isfinite(self.value)):
            raise ContractError(f"Finite inverse temperature must be positive, got {self.value}")

    @classmethod
    def uniform(cls) -> "InverseTemperature":
        return cls(TemperatureKind.UNIFORM, 0.0)

    @classmethod
    def infinity(cls) -> "InverseTemperature":
        return cls(TemperatureKind.INFINITY, math.inf)

    @classmethod
    def finite(cls, value: float) -> "InverseTemperature":
        return cls(TemperatureKind.FINITE, float(value))

    @property
    def is_uniform(self) -> bool:
        return self.kind is TemperatureKind.UNIFORM

    @property
    def is_infinite(self) -> bool:
        return self.kind is TemperatureKind.INFINITY

    def __float__(self) -> float:
        return self.value

    @property
    def label(self) -> str:
        """Short text used in file names and logs."""
        if self.is_uniform:
            return "uniform"
        if self.is_infinite:
            return "inf"
        return repr(self.value)


@dataclass(frozen=True)
class LayerSpec:
    """One fully connected layer: output width and activation tag."""
    width: int
    activation: Activation

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ContractError(f"Layer width must be positive, got {self.width}")


@dataclass(frozen=True)
class MlpSpec:
    """Layered network description with role-specific validation rules."""
    input_dim: int
    layers: Tuple[LayerSpec, ...]
    role: NetworkRole
    allow_smooth_hidden: bool = False

    def __post_init__(self) -> None:
        if self.input_dim < 1:
            raise ContractError(f"Input dimension must be positive, got {self.input_dim}")
        if not self.layers:
            raise ContractError("A network needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def output_dim(self) -> int:
        return self.layers[-1].width

    @property
    def hidden_layers(self) -> Tuple[LayerSpec, ...]:
        return self.layers[:-1]

    def describe(self) -> str:
        """Render in the bracket notation, e.g. G:[z(3) | ReLU(128) | Linear(3)]."""
        names = {
            Activation.RELU: "ReLU",
            Activation.TANH: "Tanh",
            Activation.SIGMOID: "Sigmoid",
            Activation.LINEAR: "Linear",
        }
        head = "G" if self.role is NetworkRole.GENERATOR else "D"
        source = "z" if self.role is NetworkRole.GENERATOR else "x"
        parts = [f"{source}({self.input_dim})"]
        parts.extend(f"{names[layer.activation]}({layer.width})" for layer in self.layers)
        return f"{head}:[" + " | ".join(parts) + "]"


@dataclass(frozen=True)
class LatentPrior:
    """Uniform noise prior on [-1, 1]^dim."""
    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ContractError(f"Latent dimension must be positive, got {self.dim}")

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        """Draw an m x dim batch of latent codes."""
        return rng.uniform(-1.0, 1.0, size=(m, self.dim))


@dataclass
class TrainerConfig:
    """Configuration for adversarial training."""
    m: int = 64
    n: int = 500
    n_pretrain: int = 20000
    n_final: Optional[int] = None  # defaults to n
    lr_d: float = 0.05
    lr_g: float = 0.05
    seed: int = 0
    baseline_mode: TrainingMode = TrainingMode.BETA_GAN
    d_steps: int = 1
    optimizer: str = "sgd"
    momentum: float = 0.9
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    pretrain_check_every: int = 1000
    pretrain_eval_samples: int = 10000
    ks_threshold: float = 0.05
    correlation_threshold: float = 0.1
    frozen_noise_threshold: float = 0.5

    def __post_init__(self) -> None:
        """Validate counts and learning rates."""
        if self.n_final is None:
            self.n_final = self.n
        if isinstance(self.baseline_mode, str):
            self.baseline_mode = TrainingMode(self.baseline_mode)
        for name in ("m", "n", "n_pretrain", "n_final", "d_steps", "pretrain_check_every"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.pretrain_eval_samples < 100:
            raise ContractError("pretrain_eval_samples must be >= 100")
        if not (self.lr_d > 0 and self.lr_g > 0):
            raise ContractError(f"Learning rates must be positive, got lr_d={self.lr_d}, lr_g={self.lr_g}")
        if self.optimizer not in ("sgd", "momentum", "adam"):
            raise ContractError(f"Unknown optimizer: {self.optimizer}")


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture with a shared standard deviation."""
    centers: Tuple[Tuple[float, ...], ...]
    sigma: float
    weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        centers = tuple(tuple(float(c) for c in center) for center in self.centers)
        if not centers:
            raise ContractError("A mixture needs at least one component")
        if len({len(c) for c in centers}) != 1:
            raise DimensionError("Mixture centers must share one dimension")
        if self.sigma < 0:
            raise ContractError(f"Mixture sigma must be nonnegative, got {self.sigma}")
        weights = self.weights
        if weights is None:
            weights = tuple(1.0 / len(centers) for _ in centers)
        weights = tuple(float(w) for w in weights)
        if len(weights) != len(centers):
            raise DimensionError(f"{len(weights)} weights for {len(centers)} components")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ContractError(f"Mixture weights must be nonnegative and sum to 1, got {weights}")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return len(self.centers[0])

    @property
    def n_components(self) -> int:
        return len(self.centers)

    @property
    def mean(self) -> np.ndarray:
        return np.asarray(self.weights) @ np.asarray(self.centers)


@dataclass(frozen=True)
class CubesSpec:
    """Two concentric cubic wireframes, one enclosed by the other."""
    outer_half_width: float = 0.9
    inner_half_width: float = 0.45
    edge_noise: float = 0.01

    def __post_init__(self) -> None:
        if not 0 < self.inner_half_width < self.outer_half_width:
            raise ContractError(
                f"Inner cube ({self.inner_half_width}) must lie strictly inside outer cube ({self.outer_half_width})"
            )
        if self.edge_noise < 0:
            raise ContractError(f"edge_noise must be nonnegative, got {self.edge_noise}")


@dataclass(frozen=True)
class TraceRecord:
    """One training iteration: a discriminator update then a generator update."""
    step: int
    beta: InverseTemperature
    loss_d: float
    loss_g: float
    d_real: float
    d_fake: float
    tau: int


@dataclass
class TrainingTrace:
    """Per-step training record with stage boundaries and metadata."""
    records: List[TraceRecord] = field(default_factory=list)
    stage_boundaries: List[Tuple[str, int]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    tau: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def count_update(self) -> int:
        """Account for one network-update gradient evaluation."""
        self.tau += 1
        return self.tau

    def append(self, record: TraceRecord) -> None:
        if record.tau < self.tau_at_last_record:
            raise ContractError("tau must be nondecreasing along the trace")
        self.records.append(record)

    def mark_stage(self, label: str) -> None:
        """Record that a stage ended after the current last record."""
        self.stage_boundaries.append((label, len(self.records)))

    @property
    def tau_at_last_record(self) -> int:
        return self.records[-1].tau if self.records else 0

    @property
    def next_step(self) -> int:
        return self.records[-1].step + 1 if self.records else 0

    def column(self, name: str) -> np.ndarray:
        """Extract one numeric column as an array."""
        if name == "beta":
            return np.array([float(r.beta) for r in self.records], dtype=np.float64)
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)


@dataclass(frozen=True)
class ModeCoverageReport:
    """Fraction of samples assigned to each mode and the covered count."""
    fractions: Tuple[float, ...]
    covered_count: int
    total_modes: int
    unassigned_fraction: float = 0.0


@dataclass(frozen=True)
class UniformityReport:
    """Per-dimension KS distances and the worst pairwise correlation."""
    ks: Tuple[float, ...]
    max_abs_correlation: float

    @property
    def max_ks(self) -> float:
        return max(self.ks)


@dataclass(frozen=True)
class StabilityReport:
    """Windowed |D_real - D_fake| gap series."""
    gaps: Tuple[float, ...]
    max_gap: float
    final_gap: float


@dataclass
class PretrainResult:
    """Outcome of uniform pretraining."""
    success: bool
    steps: int
    uniformity: Optional[UniformityReport] = None
    frozen_noise: Optional[float] = None
