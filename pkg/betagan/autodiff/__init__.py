"""
Minimal dense numerical core with reverse-mode differentiation.
"""

from .activations import ActivationRegistry, activation_registry
from .ops import activation, add, add_bias, log_sigmoid, matmul, mean, mul, square, sub, sum_all
from .optim import Direction, Optimizer, ordered_gradients, sgd_step
from .tensor import Tape, Tensor, backward

__all__ = [
    "Tensor",
    "Tape",
    "backward",
    "matmul",
    "add_bias",
    "activation",
    "log_sigmoid",
    "add",
    "sub",
    "mul",
    "square",
    "sum_all",
    "mean",
    "sgd_step",
    "Optimizer",
    "Direction",
    "ordered_gradients",
    "ActivationRegistry",
    "activation_registry",
]
