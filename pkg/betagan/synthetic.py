"""
Toy datasets: Gaussian mixtures in one to three dimensions and two nested
cubic wireframes.

Every layout is written in the reference box [-1, 1]^d. place_layout maps it
onto a configured box with one uniform scale per experiment, so a mixture
keeps its isotropic sigma of MIXTURE_SIGMA (times half the box width) no
matter how many points are drawn.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import yaml

from .models import BoxDomain, ContractError, CubesSpec, Dataset, MixtureSpec, RescaleTransform
from .target import reflect_into_box

logger = logging.getLogger("betagan.synthetic")

MIXTURE_SIGMA = 0.05

CENTER_EXTENT = 0.8
CENTER_SEPARATION = 0.5
MOG5_SEED = 5
MOG10_SEED = 10


def fixture_centers(
    k: int,
    dim: int,
    seed: int,
    extent: float = CENTER_EXTENT,
    min_separation: float = CENTER_SEPARATION,
    max_draws: int = 100_000,
) -> Tuple[Tuple[float, ...], ...]:
    """
    k centers drawn uniformly from [-extent, extent]^dim with a fixed seed.

    Draws closer than min_separation to an accepted center are discarded, so
    the result depends only on the arguments.
    """
    rng = np.random.default_rng(seed)
    centers = []
    for _ in range(max_draws):
        candidate = rng.uniform(-extent, extent, size=dim)
        if all(np.linalg.norm(candidate - c) >= min_separation for c in centers):
            centers.append(candidate)
            if len(centers) == k:
                return tuple(tuple(float(v) for v in c) for c in centers)
    raise ContractError(f"Could not place {k} centers {min_separation} apart in [-{extent}, {extent}]^{dim}")


MOG5_CENTERS = fixture_centers(5, 3, MOG5_SEED)
MOG10_CENTERS = fixture_centers(10, 3, MOG10_SEED)

DEFAULT_CUBES = CubesSpec(outer_half_width=0.9, inner_half_width=0.45, edge_noise=0.01)

Layout = Union[MixtureSpec, CubesSpec]


def ring_centers(k: int, radius: float = 0.7) -> Tuple[Tuple[float, float], ...]:
    """k modes evenly spaced on a circle."""
    return tuple(
        (radius * math.cos(2 * math.pi * i / k), radius * math.sin(2 * math.pi * i / k))
        for i in range(k)
    )


def line_centers(k: int, extent: float = 0.75) -> Tuple[Tuple[float], ...]:
    """k modes evenly spaced on [-extent, extent]."""
    if k == 1:
        return ((0.0,),)
    return tuple((-extent + 2 * extent * i / (k - 1),) for i in range(k))


LAYOUTS = {
    "mog5": lambda: MixtureSpec(centers=MOG5_CENTERS, sigma=MIXTURE_SIGMA),
    "mog10": lambda: MixtureSpec(centers=MOG10_CENTERS, sigma=MIXTURE_SIGMA),
    "ring8": lambda: MixtureSpec(centers=ring_centers(8), sigma=MIXTURE_SIGMA),
    "line4": lambda: MixtureSpec(centers=line_centers(4), sigma=MIXTURE_SIGMA),
    "cubes": lambda: DEFAULT_CUBES,
}


def make_layout(name: str) -> Layout:
    """Look up a named fixture layout."""
    factory = LAYOUTS.get(name)
    if factory is None:
        raise ContractError(f"Unknown synthetic layout '{name}'; choose from {sorted(LAYOUTS)}")
    return factory()


def layout_dim(spec: Layout) -> int:
    return spec.dim if isinstance(spec, MixtureSpec) else 3


def sample_mog_labeled(spec: MixtureSpec, N: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Mixture draws together with the component index of each draw."""
    if N < 1:
        raise ContractError(f"Sample count must be >= 1, got {N}")
    centers = np.asarray(spec.centers, dtype=np.float64)
    labels = rng.choice(spec.n_components, size=N, p=np.asarray(spec.weights))
    points = centers[labels] + spec.sigma * rng.standard_normal(size=(N, spec.dim))
    return points, labels


def sample_mog(spec: MixtureSpec, N: int, rng: np.random.Generator) -> np.ndarray:
    """N i.i.d. draws: a component by weight, then center + sigma * standard normal."""
    points, _ = sample_mog_labeled(spec, N, rng)
    return points


def cube_segments(spec: CubesSpec) -> np.ndarray:
    """
    The 24 wireframe edges as an array of shape (24, 2, 3).

    Edges 0-11 belong to the outer cube and 12-23 to the inner one.
    """
    segments = []
    for half in (spec.outer_half_width, spec.inner_half_width):
        for axis in range(3):
            others = [a for a in range(3) if a != axis]
            for s1 in (-1.0, 1.0):
                for s2 in (-1.0, 1.0):
                    start = np.zeros(3)
                    start[others[0]] = s1 * half
                    start[others[1]] = s2 * half
                    end = start.copy()
                    start[axis] = -half
                    end[axis] = half
                    segments.append((start, end))
    return np.asarray(segments, dtype=np.float64)


def sample_nested_cubes_labeled(
    spec: CubesSpec,
    N: int,
    rng: np.random.Generator,
    balanced_edges: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Wireframe draws together with the edge index (0-23) of each draw."""
    if N < 1:
        raise ContractError(f"Sample count must be >= 1, got {N}")
    segments = cube_segments(spec)
    if balanced_edges:
        edges = np.arange(N) % len(segments)
    else:
        cubes = rng.integers(0, 2, size=N)
        edges = cubes * 12 + rng.integers(0, 12, size=N)
    t = rng.uniform(0.0, 1.0, size=(N, 1))
    starts, ends = segments[edges, 0], segments[edges, 1]
    points = starts + t * (ends - starts)
    if spec.edge_noise > 0:
        points = points + spec.edge_noise * rng.standard_normal(size=points.shape)
    return points, edges


def sample_nested_cubes(
    spec: CubesSpec,
    N: int,
    rng: np.random.Generator,
    balanced_edges: bool = False,
) -> np.ndarray:
    """
    N points on two nested cubic wireframes.

    Each draw picks a cube (50/50), one of its 12 edges, a uniform position on
    that edge and adds isotropic Gaussian jitter of scale edge_noise. With
    balanced_edges the edges are visited in turn instead of at random.
    """
    points, _ = sample_nested_cubes_labeled(spec, N, rng, balanced_edges)
    return points


def _segment_distances(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    starts = segments[:, 0][None, :, :]
    direction = (segments[:, 1] - segments[:, 0])[None, :, :]
    length_sq = np.sum(direction ** 2, axis=2)
    rel = points[:, None, :] - starts
    t = np.clip(np.sum(rel * direction, axis=2) / length_sq, 0.0, 1.0)
    closest = starts + t[:, :, None] * direction
    return np.linalg.norm(points[:, None, :] - closest, axis=2)


def distance_to_wireframe(points: np.ndarray, spec: CubesSpec) -> np.ndarray:
    """Euclidean distance from each point to the union of the 24 edges."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return _segment_distances(points, cube_segments(spec)).min(axis=1)


def nearest_cube(points: np.ndarray, spec: CubesSpec) -> np.ndarray:
    """0 for points nearest the outer wireframe, 1 for the inner one."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return (_segment_distances(points, cube_segments(spec)).argmin(axis=1) >= 12).astype(int)


def sample_layout(spec: Layout, N: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, MixtureSpec):
        return sample_mog(spec, N, rng)
    return sample_nested_cubes(spec, N, rng)


def layout_transform(box: BoxDomain) -> RescaleTransform:
    """The fixed map from the reference box [-1, 1]^d onto box, equal on every axis."""
    half = box.width / 2.0
    return RescaleTransform(
        scale=(half,) * box.dim, offset=(box.midpoint,) * box.dim, raw_low=(-1.0,) * box.dim
    )


def place_layout(raw: np.ndarray, box: BoxDomain) -> Dataset:
    """
    Move layout samples into box coordinates with layout_transform.

    Gaussian tails that cross a wall are folded back by reflection.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim == 1:
        raw = raw.reshape(-1, 1)
    transform = layout_transform(box)
    moved = transform.apply(raw)
    outside = (moved < box.low) | (moved > box.high)
    points = np.where(outside, reflect_into_box(moved, box), moved)
    folded = int(np.sum(np.any(outside, axis=1)))
    if folded:
        logger.debug(f"Reflected {folded} of {raw.shape[0]} layout points back into the box")
    return Dataset(points=points, box=box, transform=transform)


def layout_to_dict(spec: Layout) -> Dict[str, Any]:
    if isinstance(spec, MixtureSpec):
        return {
            "kind": "mixture",
            "centers": [list(c) for c in spec.centers],
            "sigma": spec.sigma,
            "weights": list(spec.weights),
        }
    return {
        "kind": "cubes",
        "outer_half_width": spec.outer_half_width,
        "inner_half_width": spec.inner_half_width,
        "edge_noise": spec.edge_noise,
    }


def layout_from_dict(data: Dict[str, Any]) -> Layout:
    kind = data.get("kind")
    if kind == "mixture":
        return MixtureSpec(
            centers=tuple(tuple(c) for c in data["centers"]),
            sigma=float(data["sigma"]),
            weights=tuple(data["weights"]) if data.get("weights") is not None else None,
        )
    if kind == "cubes":
        return CubesSpec(
            outer_half_width=float(data["outer_half_width"]),
            inner_half_width=float(data["inner_half_width"]),
            edge_noise=float(data["edge_noise"]),
        )
    raise ContractError(f"Unknown layout kind: {kind!r}")


@dataclass
class DatasetDescription:
    """Sidecar contents: how a synthetic dataset was made and where it sits in the box."""
    layout: str
    spec: Layout
    n_points: int
    seed: int
    box: BoxDomain
    transform: Optional[RescaleTransform] = None

    def to_raw(self, samples: np.ndarray) -> np.ndarray:
        """Map box-space samples back to the layout's own coordinates."""
        if self.transform is None:
            return np.asarray(samples, dtype=np.float64)
        return self.transform.invert(samples)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layout": self.layout,
            "spec": layout_to_dict(self.spec),
            "n_points": self.n_points,
            "seed": self.seed,
            "box": {"low": self.box.low, "high": self.box.high, "dim": self.box.dim},
            "transform": self.transform.to_dict() if self.transform else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetDescription":
        box = data["box"]
        transform = data.get("transform")
        return cls(
            layout=str(data["layout"]),
            spec=layout_from_dict(data["spec"]),
            n_points=int(data["n_points"]),
            seed=int(data["seed"]),
            box=BoxDomain(low=float(box["low"]), high=float(box["high"]), dim=int(box["dim"])),
            transform=RescaleTransform.from_dict(transform) if transform else None,
        )


def write_sidecar(description: DatasetDescription, path: Union[str, Path]) -> Path:
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(description.to_dict(), f, sort_keys=True, default_flow_style=False)
    return out_path


def read_sidecar(path: Union[str, Path]) -> DatasetDescription:
    with open(Path(path), "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    try:
        return DatasetDescription.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ContractError(f"Malformed dataset sidecar {path}: {e}")


def sidecar_path(dataset_path: Union[str, Path]) -> Path:
    """Sidecar file name for a dataset CSV: data.csv -> data.yaml."""
    return Path(dataset_path).with_suffix(".yaml")
