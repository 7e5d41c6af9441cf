"""
Tempered target distributions inside the ambient box.

The heated distribution p_data(x; beta) is the empirical distribution
smoothed by an isotropic Gaussian kernel of per-coordinate variance 1/beta.
beta = 0 is the uniform distribution on the box and beta = infinity is the
empirical distribution itself.
"""

import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp

from .models import BoxDomain, ContractError, Dataset, DimensionError, InverseTemperature, RescaleTransform
from .utils.csv_io import read_matrix, write_matrix

logger = logging.getLogger("betagan.target")


def rescale_dataset(raw: np.ndarray, box: Optional[BoxDomain] = None) -> Dataset:
    """
    Affinely map each coordinate's [min, max] onto [box.low, box.high].

    Coordinates with zero spread map to the box midpoint.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim == 1:
        raw = raw.reshape(-1, 1)
    if raw.ndim != 2 or raw.shape[0] < 1:
        raise ContractError(f"Cannot rescale an empty dataset (shape {raw.shape})")
    if not np.all(np.isfinite(raw)):
        raise ContractError("Dataset contains non-finite values")
    if box is None:
        box = BoxDomain(dim=raw.shape[1])
    elif box.dim != raw.shape[1]:
        raise DimensionError(f"Data has {raw.shape[1]} columns but box dimension is {box.dim}")

    low = raw.min(axis=0)
    high = raw.max(axis=0)
    spread = high - low
    constant = spread == 0
    scale = np.where(constant, 0.0, box.width / np.where(constant, 1.0, spread))
    offset = np.where(constant, box.midpoint, box.low - low * scale)

    points = raw * scale + offset
    # Guard the endpoints against rounding just outside the box.
    points = np.clip(points, box.low, box.high)
    transform = RescaleTransform(
        scale=tuple(scale.tolist()), offset=tuple(offset.tolist()), raw_low=tuple(low.tolist())
    )
    return Dataset(points=points, box=box, transform=transform)


def reflect_into_box(points: np.ndarray, box: BoxDomain) -> np.ndarray:
    """
    Fold points back into the box by mirror reflection at the walls.

    Equivalent to reflecting repeatedly until inside: coordinates are taken
    modulo twice the box width and the upper half is mirrored.
    """
    width = box.width
    shifted = np.mod(np.asarray(points, dtype=np.float64) - box.low, 2.0 * width)
    folded = np.where(shifted > width, 2.0 * width - shifted, shifted)
    return np.clip(folded + box.low, box.low, box.high)


def sample_uniform(box: BoxDomain, m: int, rng: np.random.Generator) -> np.ndarray:
    """m i.i.d. points uniform on [low, high]^d."""
    if m < 1:
        raise ContractError(f"Sample count must be >= 1, got {m}")
    return rng.uniform(box.low, box.high, size=(m, box.dim))


def sample_heated(
    data: Dataset,
    beta: InverseTemperature,
    m: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Draw m samples from p_data(x; beta), reflected into the box.

    Each sample is a uniformly chosen data point plus N(0, I/beta) noise.
    At beta = INFINITY the data points are returned exactly.
    """
    if beta.is_uniform:
        raise ContractError("beta = UNIFORM has no heated form; use sample_uniform")
    if m < 1:
        raise ContractError(f"Sample count must be >= 1, got {m}")

    indices = rng.integers(0, data.size, size=m)
    centers = data.points[indices]
    if beta.is_infinite:
        return centers.copy()

    noise = rng.standard_normal(size=centers.shape) / math.sqrt(beta.value)
    return reflect_into_box(centers + noise, data.box)


def sample_target(
    data: Optional[Dataset],
    box: BoxDomain,
    beta: InverseTemperature,
    m: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Dispatch to sample_uniform or sample_heated by the temperature regime."""
    if beta.is_uniform:
        return sample_uniform(box, m, rng)
    if data is None:
        raise ContractError(f"A dataset is required to sample at beta={beta.label}")
    return sample_heated(data, beta, m, rng)


def heated_density(data: Dataset, beta: float, x: np.ndarray) -> float:
    """
    Untruncated mixture density (1/N)(beta/2pi)^(d/2) sum_i exp(-beta |x - x_i|^2 / 2).

    Used as a test oracle; the box walls are ignored.
    """
    beta = float(beta)
    if not (beta > 0 and math.isfinite(beta)):
        raise ContractError(f"heated_density needs a finite positive beta, got {beta}")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != data.dim:
        raise DimensionError(f"Point has {x.shape[0]} coordinates, dataset has {data.dim}")

    sq = np.sum((data.points - x) ** 2, axis=1)
    log_norm = 0.5 * data.dim * math.log(beta / (2.0 * math.pi)) - math.log(data.size)
    return float(math.exp(log_norm + logsumexp(-0.5 * beta * sq)))


def load_dataset(path: Union[str, Path], box: Optional[BoxDomain] = None) -> Dataset:
    """
    Load a headerless CSV dataset.

    With a box, rows are passed through rescale_dataset; without one, the
    points must already lie in [-1, 1]^d.
    """
    raw = read_matrix(path)
    if box is not None:
        dataset = rescale_dataset(raw, box.with_dim(raw.shape[1]))
    else:
        dataset = Dataset(points=raw, box=BoxDomain(dim=raw.shape[1]))
    logger.info(f"Loaded {dataset.size} points in {dataset.dim} dimensions from {path}")
    return dataset


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write dataset points as a headerless CSV, one point per row."""
    return write_matrix(path, dataset.points)
