"""
betagan - annealed adversarial training lab

Trains a generator from the uniform distribution on a box toward an empirical
distribution along a geometric inverse-temperature schedule, and measures
mode coverage and stability against a vanilla GAN baseline.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config
from .core import BetaGanLab, setup_logging
from .models import (
    BetaGanError,
    BoxDomain,
    CheckpointError,
    ConfigError,
    ConstraintError,
    ContractError,
    Dataset,
    DataFormatError,
    DimensionError,
    InverseTemperature,
    LatentPrior,
    MlpSpec,
    TrainerConfig,
    TrainingFault,
    TrainingMode,
    TrainingTrace,
)
from .schedule import make_schedule
from .trainer import AdversarialTrainer

__all__ = [
    "BetaGanLab",
    "AdversarialTrainer",
    "ExperimentConfig",
    "load_config",
    "setup_logging",
    "make_schedule",
    "BoxDomain",
    "Dataset",
    "InverseTemperature",
    "LatentPrior",
    "MlpSpec",
    "TrainerConfig",
    "TrainingMode",
    "TrainingTrace",
    "BetaGanError",
    "CheckpointError",
    "ConfigError",
    "ConstraintError",
    "ContractError",
    "DataFormatError",
    "DimensionError",
    "TrainingFault",
]
