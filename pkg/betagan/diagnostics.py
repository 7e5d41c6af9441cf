"""
Evaluation instruments: mode coverage, uniformity, frozen-noise collapse and
training-curve stability.
"""

import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .models import (
    BoxDomain,
    ContractError,
    ModeCoverageReport,
    StabilityReport,
    TrainingTrace,
    UniformityReport,
)

logger = logging.getLogger("betagan.diagnostics")

# Mean distance between two independent uniform points in the unit cube.
_UNIT_CUBE_MEAN_DISTANCE = {
    1: 1.0 / 3.0,
    2: (2.0 + math.sqrt(2.0) + 5.0 * math.log(1.0 + math.sqrt(2.0))) / 15.0,
    3: 0.6617071822671762,
}
_REFERENCE_SEED = 20170613
_REFERENCE_SIZE = 4000
_PAIRWISE_CHUNK = 256


def _as_samples(samples) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1)
    return samples


def mode_coverage(
    samples: np.ndarray,
    centers: np.ndarray,
    radius: float,
    coverage_threshold: float = 0.02,
) -> ModeCoverageReport:
    """
    Assign each sample to its nearest center if within radius.

    A mode is covered when its assigned fraction reaches coverage_threshold.
    """
    samples = _as_samples(samples)
    centers = _as_samples(centers)
    if samples.shape[0] == 0:
        raise ContractError("mode_coverage needs at least one sample")
    if not radius > 0:
        raise ContractError(f"Coverage radius must be positive, got {radius}")
    if samples.shape[1] != centers.shape[1]:
        raise ContractError(f"Samples have {samples.shape[1]} columns but centers have {centers.shape[1]}")

    distances = cdist(samples, centers)
    nearest = np.argmin(distances, axis=1)
    within = distances[np.arange(samples.shape[0]), nearest] <= radius
    counts = np.bincount(nearest[within], minlength=centers.shape[0])
    fractions = counts / samples.shape[0]
    covered = int(np.sum(fractions >= coverage_threshold))
    return ModeCoverageReport(
        fractions=tuple(float(f) for f in fractions),
        covered_count=covered,
        total_modes=int(centers.shape[0]),
        unassigned_fraction=float(1.0 - within.mean()),
    )


def uniformity_score(samples: np.ndarray, box: BoxDomain) -> UniformityReport:
    """
    Per-dimension KS distance against the uniform CDF on [low, high], plus
    the largest absolute Pearson correlation between coordinate pairs.

    Zero-variance coordinates make the correlation worst-case (1.0).
    """
    samples = _as_samples(samples)
    if samples.shape[0] < 100:
        raise ContractError(f"uniformity_score needs at least 100 samples, got {samples.shape[0]}")
    if samples.shape[1] != box.dim:
        raise ContractError(f"Samples have {samples.shape[1]} columns but box dimension is {box.dim}")

    ks = tuple(
        float(stats.kstest(samples[:, j], "uniform", args=(box.low, box.width)).statistic)
        for j in range(box.dim)
    )

    if box.dim < 2:
        max_corr = 0.0
    elif np.any(np.std(samples, axis=0) == 0):
        max_corr = 1.0
    else:
        corr = np.corrcoef(samples, rowvar=False)
        off_diagonal = np.abs(corr[~np.eye(box.dim, dtype=bool)])
        max_corr = float(np.max(off_diagonal)) if np.all(np.isfinite(off_diagonal)) else 1.0
    return UniformityReport(ks=ks, max_abs_correlation=max_corr)


def mean_pairwise_distance(samples: np.ndarray) -> float:
    """Mean Euclidean distance over all n^2 ordered pairs (self-pairs included)."""
    samples = _as_samples(samples)
    n = samples.shape[0]
    total = 0.0
    for start in range(0, n, _PAIRWISE_CHUNK):
        total += float(cdist(samples[start:start + _PAIRWISE_CHUNK], samples).sum())
    return total / (n * n)


@lru_cache(maxsize=64)
def uniform_mean_distance(dim: int, width: float = 2.0) -> float:
    """
    Expected distance between two independent uniform points in a box of the given width.

    Closed form for d <= 3, fixed-seed Monte-Carlo otherwise.
    """
    if dim in _UNIT_CUBE_MEAN_DISTANCE:
        return width * _UNIT_CUBE_MEAN_DISTANCE[dim]
    rng = np.random.default_rng(_REFERENCE_SEED + dim)
    reference = rng.uniform(0.0, 1.0, size=(_REFERENCE_SIZE, dim))
    n = reference.shape[0]
    unit_mean = mean_pairwise_distance(reference) * n / (n - 1)
    logger.debug(f"Monte-Carlo uniform mean distance for d={dim}: {unit_mean:.6f}")
    return width * unit_mean


def frozen_noise_score(samples: np.ndarray, box: Optional[BoxDomain] = None) -> float:
    """
    Spread of a generated batch relative to true uniform noise.

    Mean pairwise distance of the batch divided by the expected value of the
    same statistic for an equally sized uniform batch in the box. Healthy
    uniform noise scores about 1; a collapsed generator scores about 0.
    """
    samples = _as_samples(samples)
    n = samples.shape[0]
    if n < 2:
        raise ContractError("frozen_noise_score needs at least 2 samples")
    if box is None:
        box = BoxDomain(dim=samples.shape[1])
    reference = uniform_mean_distance(samples.shape[1], box.width) * (n - 1) / n
    return mean_pairwise_distance(samples) / reference


def stability_report(trace: Union[TrainingTrace, Sequence], window: int) -> StabilityReport:
    """Rolling mean over `window` steps of |D_real - D_fake|."""
    if isinstance(trace, TrainingTrace):
        d_real, d_fake = trace.column("d_real"), trace.column("d_fake")
    else:
        pairs = np.asarray(trace, dtype=np.float64).reshape(-1, 2)
        d_real, d_fake = pairs[:, 0], pairs[:, 1]
    if d_real.size == 0:
        raise ContractError("stability_report needs a nonempty trace")
    if window < 1:
        raise ContractError(f"Window must be >= 1, got {window}")
    if window > d_real.size:
        raise ContractError(f"Window {window} is longer than the trace ({d_real.size} steps)")

    gap = np.abs(d_real - d_fake)
    rolling = np.convolve(gap, np.ones(window) / window, mode="valid")
    rolling = np.clip(rolling, 0.0, 1.0)
    return StabilityReport(
        gaps=tuple(float(g) for g in rolling),
        max_gap=float(rolling.max()),
        final_gap=float(rolling[-1]),
    )


def nearest_point_distances(samples: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distance from each sample to its nearest data point."""
    tree = cKDTree(_as_samples(points))
    distances, _ = tree.query(_as_samples(samples))
    return distances


def passes_uniformity(
    uniformity: UniformityReport,
    frozen_noise: float,
    ks_threshold: float = 0.05,
    correlation_threshold: float = 0.1,
    frozen_noise_threshold: float = 0.5,
) -> bool:
    """The pretraining criterion: small KS, weak correlations, no frozen noise."""
    return (
        uniformity.max_ks < ks_threshold
        and uniformity.max_abs_correlation < correlation_threshold
        and frozen_noise > frozen_noise_threshold
    )
