"""
Activation registry for managing elementwise nonlinearities.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.special import expit

from ..models import Activation, ContractError

# Sigmoid outputs are kept strictly inside (0, 1).
_SIGMOID_LOW = np.finfo(np.float64).tiny
_SIGMOID_HIGH = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class ActivationFunction:
    """Forward map and derivative of one activation."""
    kind: Activation
    forward: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray, np.ndarray], np.ndarray]  # (x, y) -> dy/dx
    piecewise_linear: bool


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.clip(expit(x), _SIGMOID_LOW, _SIGMOID_HIGH)


class ActivationRegistry:
    """Registry for looking up activations by tag."""

    def __init__(self):
        self._functions: Dict[Activation, ActivationFunction] = {}
        self._register_default_activations()

    def register(self, function: ActivationFunction) -> None:
        """Register an activation implementation."""
        self._functions[function.kind] = function

    def get(self, kind: Activation) -> ActivationFunction:
        """Get the implementation for an activation tag."""
        if isinstance(kind, str):
            kind = Activation(kind)
        function = self._functions.get(kind)
        if function is None:
            raise ContractError(f"No activation registered for: {kind}")
        return function

    def find(self, tag: str) -> Optional[ActivationFunction]:
        """Look up by text tag, returning None for unknown tags."""
        try:
            return self.get(Activation(tag.lower()))
        except (ValueError, ContractError):
            return None

    def is_piecewise_linear(self, kind: Activation) -> bool:
        return self.get(kind).piecewise_linear

    def get_supported_tags(self) -> List[str]:
        return [kind.value for kind in self._functions]

    def _register_default_activations(self) -> None:
        """Register the four tags used by generators and discriminators."""
        self.register(ActivationFunction(
            kind=Activation.RELU,
            forward=lambda x: np.maximum(x, 0.0),
            derivative=lambda x, y: (x > 0).astype(np.float64),
            piecewise_linear=True,
        ))
        self.register(ActivationFunction(
            kind=Activation.LINEAR,
            forward=lambda x: x.copy(),
            derivative=lambda x, y: np.ones_like(x),
            piecewise_linear=True,
        ))
        self.register(ActivationFunction(
            kind=Activation.TANH,
            forward=np.tanh,
            derivative=lambda x, y: 1.0 - y * y,
            piecewise_linear=False,
        ))
        self.register(ActivationFunction(
            kind=Activation.SIGMOID,
            forward=_sigmoid,
            derivative=lambda x, y: y * (1.0 - y),
            piecewise_linear=False,
        ))


# Global activation registry instance
activation_registry = ActivationRegistry()
