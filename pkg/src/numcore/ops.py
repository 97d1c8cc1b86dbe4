"""Differentiable primitives.

Every primitive computes its output eagerly, refuses non-finite results and,
when a tape is active and an input requires gradients, records a closure
that maps the output adjoint to input adjoints.
"""

import builtins
import math
from collections.abc import Sequence
from typing import Any

import numpy as np

from ..utils.exceptions import ShapeException, ValidationException
from .tensor import BackwardFn, Tensor, check_finite, current_tape

IGNORE_ID = -1
_GELU_C = math.sqrt(2.0 / math.pi)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _emit(
    data: np.ndarray, inputs: tuple[Tensor, ...], backward: BackwardFn, op: str
) -> Tensor:
    check_finite(data, op)
    out = Tensor._wrap(data)
    tape = current_tape()
    if tape is not None and builtins.any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(out, inputs, backward, op)
    return out


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _emit(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _emit(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _emit(
        a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), "mul"
    )


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _emit(
        a.data / b.data,
        (a, b),
        lambda g: (g / b.data, -g * a.data / (b.data * b.data)),
        "div",
    )


def neg(a: Tensor) -> Tensor:
    return _emit(-a.data, (a,), lambda g: (-g,), "neg")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` over the last two axes; leading axes broadcast."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeException(f"shape: cannot multiply {a.shape} by {b.shape}")

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g @ np.swapaxes(b.data, -1, -2), np.swapaxes(a.data, -1, -2) @ g

    return _emit(a.data @ b.data, (a, b), backward, "matmul")


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    original = a.shape
    return _emit(
        a.data.reshape(tuple(shape)),
        (a,),
        lambda g: (g.reshape(original),),
        "reshape",
    )


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes) or tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _emit(
        np.transpose(a.data, axes),
        (a,),
        lambda g: (np.transpose(g, inverse),),
        "transpose",
    )


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return np.split(g, bounds, axis=axis)

    return _emit(
        np.concatenate([t.data for t in tensors], axis=axis),
        tensors,
        backward,
        "concat",
    )


def sum(a: Tensor, axis: int | tuple[int, ...] | None = None) -> Tensor:  # noqa: A001
    shape = a.shape

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _emit(np.asarray(a.data.sum(axis=axis)), (a,), backward, "sum")


def mean(a: Tensor, axis: int | None = None) -> Tensor:
    count = a.size if axis is None else a.shape[axis]
    return mul(sum(a, axis), 1.0 / count)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Rows of ``weight`` selected by integer ``ids`` (any shape)."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= weight.shape[0]):
        raise ValidationException("vocab overflow: id outside the embedding table")

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(weight.data)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, weight.shape[1]))
        return (grad,)

    return _emit(weight.data[ids], (weight,), backward, "embedding")


def gather_last(a: Tensor, index: np.ndarray) -> Tensor:
    """``out[..., j] = a[..., index[..., j]]``; ``index`` broadcasts over leading axes."""
    index = np.broadcast_to(
        np.asarray(index, dtype=np.int64), a.shape[:-1] + (np.shape(index)[-1],)
    )

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        width = a.shape[-1]
        grad = np.zeros((int(np.prod(a.shape[:-1])), width))
        rows = np.arange(grad.shape[0])[:, None]
        np.add.at(grad, (rows, index.reshape(grad.shape[0], -1)), g.reshape(grad.shape[0], -1))
        return (grad.reshape(a.shape),)

    return _emit(np.take_along_axis(a.data, index, axis=-1), (a,), backward, "gather")


def softmax(x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Max-shifted softmax. Positions where ``mask`` is False get probability 0."""
    z = x.data
    if mask is not None:
        z = np.where(mask, z, -np.inf)
    peak = np.max(z, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    e = np.exp(z - peak)
    total = e.sum(axis=axis, keepdims=True)
    y = e / np.where(total == 0.0, 1.0, total)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _emit(y, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return _emit(out, (x,), backward, "log_softmax")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float) -> Tensor:
    """Normalise the last axis with population variance, then scale and shift."""
    width = x.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise ShapeException(
            f"shape: layer_norm parameters {gamma.shape}/{beta.shape} vs width {width}"
        )
    centred = x.data - x.data.mean(axis=-1, keepdims=True)
    sigma = np.sqrt((centred * centred).mean(axis=-1, keepdims=True) + eps)
    xhat = centred / sigma

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        dxhat = g * gamma.data
        dx = (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        ) / sigma
        lead = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _emit(xhat * gamma.data + beta.data, (x, gamma, beta), backward, "layer_norm")


def gelu(x: Tensor) -> Tensor:
    """Tanh approximation of x * Phi(x)."""
    v = x.data
    t = np.tanh(_GELU_C * (v + 0.044715 * v**3))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        dt = (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * v * v)
        return (g * (0.5 * (1.0 + t) + 0.5 * v * dt),)

    return _emit(0.5 * v * (1.0 + t), (x,), backward, "gelu")


def dropout(
    x: Tensor, p: float, rng: np.random.Generator | None, training: bool
) -> Tensor:
    """Inverted dropout; identity outside training or when ``p == 0``."""
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValidationException("dropout in training mode needs an explicit rng")
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return _emit(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def cross_entropy(
    logits: Tensor, targets: Sequence[int] | np.ndarray, ignore_id: int = IGNORE_ID
) -> Tensor:
    """Mean natural-log NLL over positions whose target is not ``ignore_id``."""
    if logits.ndim != 2:
        raise ShapeException(f"shape: cross_entropy expects [n, V], got {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64)
    n, vocab = logits.shape
    if targets.shape != (n,):
        raise ShapeException(f"shape: {targets.shape[0]} targets for {n} rows")
    supervised = targets != ignore_id
    if np.any(targets[supervised] >= vocab) or np.any(targets[supervised] < 0):
        raise ValidationException("vocab overflow: target id outside [0, V)")
    count = int(supervised.sum())
    if count == 0:
        raise ValidationException("no supervised positions")

    rows = np.nonzero(supervised)[0]
    cols = targets[supervised]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -log_probs[rows, cols].sum() / count

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(logits.data)
        grad[rows] = np.exp(log_probs[rows])
        grad[rows, cols] -= 1.0
        return (grad * (g / count),)

    return _emit(np.asarray(loss), (logits,), backward, "cross_entropy")
