"""
Generator and discriminator MLPs.

This module builds fully connected networks from an MlpSpec, enforces the
architecture rules of each role, runs forward passes and reads/writes
checkpoint files.
"""

import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
import yaml

from .autodiff import Tensor, activation, add_bias, matmul
from .autodiff.activations import activation_registry
from .models import (
    Activation,
    BoxDomain,
    CheckpointError,
    ConstraintError,
    ContractError,
    DimensionError,
    LatentPrior,
    LayerSpec,
    MlpSpec,
    NetworkRole,
)

logger = logging.getLogger("betagan.networks")

CHECKPOINT_MAGIC = b"BETAGAN-MLP\x00"
CHECKPOINT_VERSION = 1

ArrayLike = Union[Tensor, np.ndarray]


@dataclass(frozen=True)
class Mlp:
    """A built network: its spec plus per-layer weights and biases."""
    spec: MlpSpec
    parameters: Tuple[Tensor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", tuple(self.parameters))
        expected = parameter_shapes(self.spec)
        actual = [p.shape for p in self.parameters]
        if actual != expected:
            raise DimensionError(f"Parameter shapes {actual} do not match spec shapes {expected}")

    @property
    def weights(self) -> List[Tensor]:
        return list(self.parameters[0::2])

    @property
    def biases(self) -> List[Tensor]:
        return list(self.parameters[1::2])

    @property
    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.parameters))

    def with_parameters(self, parameters: Sequence[Tensor]) -> "Mlp":
        """A new network sharing this spec with replaced parameters."""
        return Mlp(spec=self.spec, parameters=tuple(parameters))

    def parameter_hash(self) -> str:
        """Digest of the exact parameter bits."""
        digest = hashlib.sha256()
        for p in self.parameters:
            digest.update(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
        return digest.hexdigest()


def parse_layers(text: str) -> Tuple[LayerSpec, ...]:
    """
    Parse layer notation such as "relu 128 | relu 128 | linear 3".

    Each entry is an activation tag and a width, in either order.
    """
    layers = []
    for chunk in text.split("|"):
        tokens = chunk.replace("(", " ").replace(")", " ").split()
        if len(tokens) != 2:
            raise ContractError(f"Cannot parse layer '{chunk.strip()}': expected '<activation> <width>'")
        first, second = tokens
        tag, width = (first, second) if not first.isdigit() else (second, first)
        function = activation_registry.find(tag)
        if function is None or not width.isdigit():
            raise ContractError(f"Cannot parse layer '{chunk.strip()}'")
        layers.append(LayerSpec(width=int(width), activation=function.kind))
    return tuple(layers)


def format_layers(layers: Sequence[LayerSpec]) -> str:
    """Inverse of parse_layers."""
    return " | ".join(f"{layer.activation.value} {layer.width}" for layer in layers)


def parameter_shapes(spec: MlpSpec) -> List[Tuple[int, ...]]:
    shapes: List[Tuple[int, ...]] = []
    fan_in = spec.input_dim
    for layer in spec.layers:
        shapes.append((fan_in, layer.width))
        shapes.append((layer.width,))
        fan_in = layer.width
    return shapes


def validate_spec(spec: MlpSpec) -> None:
    """Enforce the role-specific architecture rules."""
    final = spec.layers[-1]
    if spec.role is NetworkRole.GENERATOR:
        if final.activation is not Activation.LINEAR:
            raise ConstraintError(
                f"Generator output layer must be linear, got {final.activation.value} in {spec.describe()}"
            )
        smooth = [
            layer.activation.value for layer in spec.hidden_layers
            if not activation_registry.is_piecewise_linear(layer.activation)
        ]
        if smooth and not spec.allow_smooth_hidden:
            raise ConstraintError(
                f"Generator hidden activations {smooth} are not piecewise-linear; smooth generators "
                f"collapse to frozen noise when learning the uniform distribution. "
                f"Set allow_smooth_hidden to build {spec.describe()} anyway"
            )
        if smooth:
            logger.warning(f"Building smooth generator {spec.describe()} with override")
    else:
        if final.width != 1 or final.activation is not Activation.SIGMOID:
            raise ConstraintError(
                f"Discriminator must end in a width-1 sigmoid layer, got {spec.describe()}"
            )


def build_mlp(spec: MlpSpec, seed: int) -> Mlp:
    """
    Build and initialize a network.

    Weights are uniform on [-r, r] with r = sqrt(6 / (fan_in + fan_out));
    biases start at zero. Equal seeds give bit-identical parameters.
    """
    validate_spec(spec)
    rng = np.random.default_rng(seed)
    parameters: List[Tensor] = []
    fan_in = spec.input_dim
    for index, layer in enumerate(spec.layers):
        limit = np.sqrt(6.0 / (fan_in + layer.width))
        weight = rng.uniform(-limit, limit, size=(fan_in, layer.width))
        parameters.append(Tensor(weight, requires_grad=True, name=f"layer{index}.weight"))
        parameters.append(Tensor(np.zeros(layer.width), requires_grad=True, name=f"layer{index}.bias"))
        fan_in = layer.width
    mlp = Mlp(spec=spec, parameters=tuple(parameters))
    logger.debug(f"Built {spec.describe()} with {mlp.parameter_count} parameters (seed={seed})")
    return mlp


def validate_pairing(generator: Mlp, prior: LatentPrior, box: BoxDomain) -> bool:
    """Check dim(z) >= d, and that the generator maps the prior into the box's dimension."""
    if generator.spec.input_dim != prior.dim:
        raise DimensionError(
            f"Generator input width {generator.spec.input_dim} does not match latent dimension {prior.dim}"
        )
    if prior.dim < box.dim:
        raise ConstraintError(
            f"Latent dimension {prior.dim} is smaller than ambient dimension {box.dim}; "
            f"the generator cannot fill the box"
        )
    if generator.spec.output_dim != box.dim:
        raise DimensionError(
            f"Generator output width {generator.spec.output_dim} does not match box dimension {box.dim}"
        )
    return True


def _as_input(batch: ArrayLike) -> Tensor:
    return batch if isinstance(batch, Tensor) else Tensor(batch)


def _forward(net: Mlp, batch: ArrayLike, apply_final: bool) -> Tensor:
    x = _as_input(batch)
    if x.data.ndim != 2 or x.shape[1] != net.spec.input_dim:
        raise DimensionError(
            f"{net.spec.role.value} expects batches of shape (m, {net.spec.input_dim}), got {x.shape}"
        )
    last = len(net.spec.layers) - 1
    for index, layer in enumerate(net.spec.layers):
        weight, bias = net.parameters[2 * index], net.parameters[2 * index + 1]
        x = add_bias(matmul(x, weight), bias)
        if index < last or apply_final:
            x = activation(x, layer.activation)
    return x


def forward_generator(g: Mlp, z_batch: ArrayLike) -> Tensor:
    """Map an m x dim(z) latent batch to m x d points (unbounded)."""
    return _forward(g, z_batch, apply_final=True)


def forward_discriminator(d_net: Mlp, x_batch: ArrayLike) -> Tensor:
    """Probabilities D(x) in (0, 1), shape m x 1."""
    return _forward(d_net, x_batch, apply_final=True)


def discriminator_logits(d_net: Mlp, x_batch: ArrayLike) -> Tensor:
    """Pre-sigmoid discriminator output, for the fused log-sigmoid losses."""
    return _forward(d_net, x_batch, apply_final=False)


def generate(g: Mlp, prior: LatentPrior, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw m generated samples as a plain array."""
    return forward_generator(g, prior.sample(m, rng)).data


def spec_to_dict(spec: MlpSpec) -> Dict[str, Any]:
    return {
        "role": spec.role.value,
        "input_dim": spec.input_dim,
        "layers": format_layers(spec.layers),
        "allow_smooth_hidden": spec.allow_smooth_hidden,
    }


def spec_from_dict(data: Dict[str, Any]) -> MlpSpec:
    return MlpSpec(
        input_dim=int(data["input_dim"]),
        layers=parse_layers(str(data["layers"])),
        role=NetworkRole(data["role"]),
        allow_smooth_hidden=bool(data.get("allow_smooth_hidden", False)),
    )


def save_checkpoint(mlp: Mlp, path: Union[str, Path]) -> None:
    """
    Write a checkpoint file.

    Layout: magic, uint32 version, uint64 header length, YAML header with the
    spec, then every parameter as little-endian float64 in layer order.
    """
    save_path = Path(path)
    try:
        save_path.parent.mkdir(parents=True, exist_ok=True)
        header = yaml.safe_dump(
            {"spec": spec_to_dict(mlp.spec), "parameter_count": mlp.parameter_count},
            sort_keys=True,
        ).encode("utf-8")
        with open(save_path, "wb") as f:
            f.write(CHECKPOINT_MAGIC)
            f.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header)))
            f.write(header)
            for p in mlp.parameters:
                f.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    except OSError as e:
        raise CheckpointError(f"Failed to write checkpoint {save_path}: {e}")


def _parse_checkpoint(raw: bytes, load_path: Path) -> Tuple[MlpSpec, np.ndarray]:
    offset = len(CHECKPOINT_MAGIC)
    version, header_len = struct.unpack_from("<IQ", raw, offset)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version} in {load_path}")
    offset += struct.calcsize("<IQ")
    if offset + header_len > len(raw):
        raise CheckpointError(f"Checkpoint {load_path} is truncated inside its header")
    header = yaml.safe_load(raw[offset:offset + header_len].decode("utf-8"))
    offset += header_len

    spec = spec_from_dict(header["spec"])
    block = np.frombuffer(raw, dtype="<f8", offset=offset)
    if block.size != int(header["parameter_count"]):
        raise CheckpointError(
            f"Checkpoint {load_path} holds {block.size} values, header declares {header['parameter_count']}"
        )
    expected = sum(int(np.prod(shape)) for shape in parameter_shapes(spec))
    if block.size != expected:
        raise CheckpointError(f"Checkpoint {load_path} holds {block.size} values, its spec needs {expected}")
    return spec, block


def load_checkpoint(path: Union[str, Path]) -> Mlp:
    """Read a checkpoint written by save_checkpoint; parameters round-trip bit-exactly."""
    load_path = Path(path)
    try:
        raw = load_path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"Failed to read checkpoint {load_path}: {e}")

    if not raw.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"Not a betagan checkpoint: {load_path}")
    try:
        spec, block = _parse_checkpoint(raw, load_path)
    except (struct.error, yaml.YAMLError, UnicodeDecodeError, KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Corrupt checkpoint {load_path}: {e}")

    parameters = []
    cursor = 0
    for index, shape in enumerate(parameter_shapes(spec)):
        size = int(np.prod(shape))
        data = block[cursor:cursor + size].astype(np.float64).reshape(shape)
        kind = "weight" if index % 2 == 0 else "bias"
        parameters.append(Tensor(data, requires_grad=True, name=f"layer{index // 2}.{kind}"))
        cursor += size
    return Mlp(spec=spec, parameters=tuple(parameters))
