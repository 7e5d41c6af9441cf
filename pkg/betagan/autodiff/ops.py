"""
Primitive differentiable operations.

Shapes are explicit: binary operations require identical shapes, except that
add_bias adds a length-n vector to every row of an m x n matrix and the
arithmetic helpers accept a plain Python number as a constant.
"""

from typing import Tuple, Union

import numpy as np

from ..models import Activation, DimensionError
from .activations import activation_registry
from .tensor import Tensor, record_op

Operand = Union[Tensor, float, int]


def _as_tensor(value: Operand) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(float(value))


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.data.ndim == 0 or b.data.ndim == 0:
        return
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch between {a.shape} and {b.shape}")


def _reduce_to(grad: np.ndarray, like: Tensor) -> np.ndarray:
    """Sum a gradient down to a 0-d operand that was used as a constant factor."""
    if like.data.ndim == 0 and grad.ndim != 0:
        return np.asarray(grad.sum())
    return grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of an m x k and a k x n tensor."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    a_data, b_data = a.data, b.data

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return grad @ b_data.T, a_data.T @ grad

    return record_op("matmul", a_data @ b_data, (a, b), backward_fn)


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a length-n bias vector to each row of an m x n matrix."""
    if x.data.ndim != 2 or bias.data.ndim != 1 or x.shape[1] != bias.shape[0]:
        raise DimensionError(f"add_bias: cannot add bias {bias.shape} to rows of {x.shape}")

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return grad, grad.sum(axis=0)

    return record_op("add_bias", x.data + bias.data, (x, bias), backward_fn)


def activation(x: Tensor, kind: Union[Activation, str]) -> Tensor:
    """Apply an elementwise activation (relu, tanh, sigmoid or linear)."""
    function = activation_registry.get(kind)
    x_data = x.data
    y_data = function.forward(x_data)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray]:
        return (grad * function.derivative(x_data, y_data),)

    return record_op(function.kind.value, y_data, (x,), backward_fn)


def log_sigmoid(x: Tensor) -> Tensor:
    """
    Fused log(sigmoid(x)), finite for every finite x.

    Evaluated as -logaddexp(0, -x), so log(D) and log(1 - D) computed from a
    discriminator logit never reach log(0). log(1 - sigmoid(x)) is
    log_sigmoid(-x).
    """
    x_data = x.data
    y_data = -np.logaddexp(0.0, -x_data)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray]:
        # d/dx log(sigmoid(x)) = 1 - sigmoid(x) = sigmoid(-x)
        return (grad * np.exp(-np.logaddexp(0.0, x_data)),)

    return record_op("log_sigmoid", y_data, (x,), backward_fn)


def add(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape("add", a, b)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _reduce_to(grad, a), _reduce_to(grad, b)

    return record_op("add", a.data + b.data, (a, b), backward_fn)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape("sub", a, b)

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _reduce_to(grad, a), _reduce_to(-grad, b)

    return record_op("sub", a.data - b.data, (a, b), backward_fn)


def mul(a: Operand, b: Operand) -> Tensor:
    """Elementwise product; either side may be a constant number."""
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape("mul", a, b)
    a_data, b_data = a.data, b.data

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _reduce_to(grad * b_data, a), _reduce_to(grad * a_data, b)

    return record_op("mul", a_data * b_data, (a, b), backward_fn)


def square(x: Tensor) -> Tensor:
    x_data = x.data

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray]:
        return (2.0 * x_data * grad,)

    return record_op("square", x_data * x_data, (x,), backward_fn)


def sum_all(x: Tensor) -> Tensor:
    """Sum of every element, as a 0-d tensor."""
    shape = x.data.shape

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray]:
        return (np.full(shape, float(grad)),)

    return record_op("sum", np.asarray(x.data.sum()), (x,), backward_fn)


def mean(x: Tensor) -> Tensor:
    """Mean of every element, as a 0-d tensor."""
    shape = x.data.shape
    count = x.data.size

    def backward_fn(grad: np.ndarray) -> Tuple[np.ndarray]:
        return (np.full(shape, float(grad) / count),)

    return record_op("mean", np.asarray(x.data.mean()), (x,), backward_fn)
