"""Dense float64 tensors and the tape that records them for reverse mode."""

from collections.abc import Callable, Sequence
from contextvars import ContextVar, Token
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..utils.exceptions import NumericException, ValidationException

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_active_tape: ContextVar["Tape | None"] = ContextVar("active_tape", default=None)


def check_finite(values: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericException(f"non-finite values produced by {where}")


class Tensor:
    """A contiguous float64 array with an optional gradient slot."""

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
    ):
        array = np.array(data, dtype=np.float64)
        check_finite(array, name or "tensor construction")
        self.data = array
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @classmethod
    def _wrap(cls, data: np.ndarray) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = False
        out.grad = None
        out.name = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Same values, cut from the graph."""
        return Tensor._wrap(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # Operators delegate to ops; imported lazily to avoid a cycle.
    def __add__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from . import ops

        return ops.matmul(self, other)

    def reshape(self, *shape: int) -> "Tensor":
        from . import ops

        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from . import ops

        return ops.transpose(self, axes)

    def sum(self, axis: int | tuple[int, ...] | None = None) -> "Tensor":
        from . import ops

        return ops.sum(self, axis)


@dataclass
class TapeEntry:
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: BackwardFn
    op: str


class Tape:
    """Ordered record of primitive operations.

    Activated as a context manager; while active, every primitive with at
    least one gradient-requiring input appends an entry. Entries are
    appended after their inputs exist, so the list is topologically sorted.
    """

    def __init__(self) -> None:
        self.entries: list[TapeEntry] = []
        self._token: Token["Tape | None"] | None = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.entries)

    def record(
        self,
        output: Tensor,
        inputs: tuple[Tensor, ...],
        backward: BackwardFn,
        op: str,
    ) -> None:
        self.entries.append(TapeEntry(output, inputs, backward, op))

    def owns(self, tensor: Tensor) -> bool:
        return any(entry.output is tensor for entry in self.entries)

    def backward(self, loss: Tensor) -> None:
        """Populate ``.grad`` of every gradient-requiring tensor on the tape.

        Tensors recorded on the tape but off every path to ``loss`` receive
        zero gradients.
        """
        if loss.size != 1:
            raise ValidationException(
                f"backward needs a scalar loss, got shape {loss.shape}"
            )
        if not self.owns(loss):
            raise ValidationException("loss was not recorded on this tape")

        adjoints: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        seen: dict[int, Tensor] = {id(loss): loss}
        for entry in reversed(self.entries):
            grad_out = adjoints.get(id(entry.output))
            for tensor in entry.inputs:
                if tensor.requires_grad:
                    seen.setdefault(id(tensor), tensor)
            if grad_out is None:
                continue
            input_grads = entry.backward(grad_out)
            for tensor, grad in zip(entry.inputs, input_grads, strict=True):
                if grad is None or not tensor.requires_grad:
                    continue
                grad = unbroadcast(grad, tensor.shape)
                key = id(tensor)
                if key in adjoints:
                    adjoints[key] = adjoints[key] + grad
                else:
                    adjoints[key] = grad

        for key, tensor in seen.items():
            grad = adjoints.get(key)
            tensor.grad = np.zeros_like(tensor.data) if grad is None else grad


def current_tape() -> Tape | None:
    return _active_tape.get()


class no_grad:
    """Suspend recording, e.g. for evaluation inside a training step."""

    def __enter__(self) -> None:
        self._token = _active_tape.set(None)

    def __exit__(self, *exc: object) -> None:
        _active_tape.reset(self._token)


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Reverse pass over ``tape`` (default: the active tape)."""
    tape = tape or current_tape()
    if tape is None:
        raise ValidationException("no tape recorded the loss")
    tape.backward(loss)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)
