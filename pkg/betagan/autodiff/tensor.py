"""
Dense 64-bit tensors with tape-based reverse-mode differentiation.

Operations record themselves on the innermost active Tape. backward() walks
that tape in reverse recording order, which is a reverse topological order
because a node can only consume tensors that already exist.
"""

import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models import ContractError

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """A row-major float64 array that can take part in differentiation."""

    __slots__ = ("data", "requires_grad", "name", "_node")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(())
        self.data = array
        self.requires_grad = requires_grad
        self.name = name
        self._node: Optional["TapeNode"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def is_scalar(self) -> bool:
        return self.data.size == 1

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if not self.is_scalar:
            raise ContractError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        """Read-only view of the underlying data."""
        view = self.data.view()
        view.flags.writeable = False
        return view

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar; implementations live in ops.
    def __matmul__(self, other: "Tensor") -> "Tensor":
        from .ops import matmul
        return matmul(self, other)

    def __add__(self, other) -> "Tensor":
        from .ops import add
        return add(self, other)

    def __radd__(self, other) -> "Tensor":
        from .ops import add
        return add(other, self)

    def __sub__(self, other) -> "Tensor":
        from .ops import sub
        return sub(self, other)

    def __rsub__(self, other) -> "Tensor":
        from .ops import sub
        return sub(other, self)

    def __mul__(self, other) -> "Tensor":
        from .ops import mul
        return mul(self, other)

    def __rmul__(self, other) -> "Tensor":
        from .ops import mul
        return mul(other, self)

    def __neg__(self) -> "Tensor":
        from .ops import mul
        return mul(self, -1.0)


@dataclass
class TapeNode:
    """A recorded primitive: its output, inputs and local backward rule."""
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward_fn: BackwardFn


class Tape:
    """Ordered record of primitive operations, used as a context manager."""

    _local = threading.local()

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        stack = self._stack()
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        stack = self._stack()
        if stack and stack[-1] is self:
            stack.pop()

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def _stack(cls) -> List["Tape"]:
        if not hasattr(cls._local, "stack"):
            cls._local.stack = []
        return cls._local.stack

    @classmethod
    def active(cls) -> Optional["Tape"]:
        """The innermost tape of the current thread, if tracing."""
        stack = cls._stack()
        return stack[-1] if stack else None

    def record(self, node: TapeNode) -> None:
        if self.consumed:
            raise ContractError("Cannot record on a tape that has already been consumed by backward()")
        node.output._node = node
        self.nodes.append(node)


def record_op(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """Wrap a primitive result and record it when tracing requires it."""
    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires_grad)
    tape = Tape.active()
    if tape is not None and requires_grad:
        tape.record(TapeNode(op=op, output=out, inputs=tuple(inputs), backward_fn=backward_fn))
    return out


def _tape_of(loss: Tensor) -> Tape:
    if loss._node is None:
        raise ContractError("Loss was not produced under tracing; wrap the forward pass in a Tape")
    for tape in reversed(Tape._stack()):
        if any(node is loss._node for node in reversed(tape.nodes)):
            return tape
    raise ContractError("The tape that recorded this loss is no longer active")


def backward(loss: Tensor, tape: Optional[Tape] = None) -> Dict[Tensor, np.ndarray]:
    """
    Gradients of a scalar loss with respect to every traced leaf parameter.

    Args:
        loss: Scalar tensor produced under tracing
        tape: Tape that recorded the loss (defaults to the active tape holding it)

    Returns:
        Mapping from each leaf tensor with requires_grad to d(loss)/d(leaf)
    """
    if not loss.is_scalar:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if tape is None:
        tape = _tape_of(loss)
    if tape.consumed:
        raise ContractError("Tape already consumed by a previous backward()")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: Dict[int, Tensor] = {}

    for node in reversed(tape.nodes):
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        local = node.backward_fn(upstream)
        for source, grad in zip(node.inputs, local):
            if grad is None or not source.requires_grad:
                continue
            key = id(source)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad
            if source.is_leaf:
                leaves[key] = source

    tape.consumed = True
    tape.nodes.clear()
    return {tensor: grads.get(key, np.zeros_like(tensor.data)) for key, tensor in leaves.items()}
