"""
Gradient steps for minimax training.
"""

from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from ..models import ContractError, DimensionError
from .tensor import Tensor


class Direction(Enum):
    """Ascent for the discriminator, descent for the generator."""
    ASCEND = "ascend"
    DESCEND = "descend"

    @property
    def sign(self) -> float:
        return 1.0 if self is Direction.ASCEND else -1.0


def _direction(direction: Union[Direction, str]) -> Direction:
    if isinstance(direction, Direction):
        return direction
    try:
        return Direction(direction)
    except ValueError:
        raise ContractError(f"Unknown step direction: {direction}")


def sgd_step(
    params: Sequence[Tensor],
    grads: Sequence[np.ndarray],
    learning_rate: float,
    direction: Union[Direction, str] = Direction.DESCEND,
) -> List[Tensor]:
    """
    One plain gradient step, params +/- learning_rate * grads.

    Returns new leaf tensors; the inputs are left untouched.
    """
    direction = _direction(direction)
    if not learning_rate > 0:
        raise ContractError(f"Learning rate must be positive, got {learning_rate}")
    if len(params) != len(grads):
        raise DimensionError(f"sgd_step: {len(params)} parameters but {len(grads)} gradients")

    updated = []
    for param, grad in zip(params, grads):
        grad = np.asarray(grad, dtype=np.float64)
        if param.shape != grad.shape:
            raise DimensionError(f"sgd_step: parameter {param.shape} and gradient {grad.shape} differ")
        data = param.data + direction.sign * learning_rate * grad
        updated.append(Tensor(data, requires_grad=param.requires_grad, name=param.name))
    return updated


class Optimizer:
    """
    Stateful update rule over a fixed list of parameter slots.

    "sgd" is plain sgd_step; "momentum" keeps a heavy-ball velocity; "adam"
    keeps bias-corrected first and second moments. State is indexed by slot
    position, so the parameter list must keep its order between steps.
    """

    def __init__(
        self,
        kind: str = "sgd",
        learning_rate: float = 0.05,
        direction: Union[Direction, str] = Direction.DESCEND,
        momentum: float = 0.9,
        beta1: float = 0.5,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if kind not in ("sgd", "momentum", "adam"):
            raise ContractError(f"Unknown optimizer: {kind}")
        if not learning_rate > 0:
            raise ContractError(f"Learning rate must be positive, got {learning_rate}")
        self.kind = kind
        self.learning_rate = learning_rate
        self.direction = _direction(direction)
        self.momentum = momentum
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self._first: Dict[int, np.ndarray] = {}
        self._second: Dict[int, np.ndarray] = {}

    def step(self, params: Sequence[Tensor], grads: Sequence[np.ndarray]) -> List[Tensor]:
        """Apply one update and return the new parameters."""
        if self.kind == "sgd":
            self.steps += 1
            return sgd_step(params, grads, self.learning_rate, self.direction)
        if len(params) != len(grads):
            raise DimensionError(f"Optimizer: {len(params)} parameters but {len(grads)} gradients")

        self.steps += 1
        effective = []
        for slot, grad in enumerate(grads):
            grad = np.asarray(grad, dtype=np.float64)
            if self.kind == "momentum":
                velocity = self._first.get(slot, np.zeros_like(grad))
                velocity = self.momentum * velocity + grad
                self._first[slot] = velocity
                effective.append(velocity)
            else:
                first = self.beta1 * self._first.get(slot, np.zeros_like(grad)) + (1 - self.beta1) * grad
                second = self.beta2 * self._second.get(slot, np.zeros_like(grad)) + (1 - self.beta2) * grad * grad
                self._first[slot] = first
                self._second[slot] = second
                first_hat = first / (1 - self.beta1 ** self.steps)
                second_hat = second / (1 - self.beta2 ** self.steps)
                effective.append(first_hat / (np.sqrt(second_hat) + self.eps))
        return sgd_step(params, effective, self.learning_rate, self.direction)


def ordered_gradients(params: Sequence[Tensor], grads: Mapping[Tensor, np.ndarray]) -> List[np.ndarray]:
    """Gradients aligned with params; parameters the loss never touched get zeros."""
    return [grads.get(param, np.zeros_like(param.data)) for param in params]
