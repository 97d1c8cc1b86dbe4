"""Adam with bias correction, and global-norm gradient clipping."""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ..utils.exceptions import NumericException, ShapeException, ValidationException
from .tensor import Tensor


@dataclass
class OptimizerState:
    """First/second moments per parameter name plus the step counter."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 0.0
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_parameters(
        cls, params: Mapping[str, Tensor], **hyper: float
    ) -> "OptimizerState":
        state = cls(**hyper)  # type: ignore[arg-type]
        for name, param in params.items():
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)
        return state


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: OptimizerState,
    lr: float,
) -> tuple[Mapping[str, Tensor], OptimizerState]:
    """One Adam update, in place. Missing gradients count as zero."""
    if lr < 0:
        raise ValidationException(f"learning rate must be non-negative, got {lr}")
    for name, grad in grads.items():
        if name not in params:
            raise ValidationException(f"gradient for unknown parameter {name!r}")
        if grad.shape != params[name].shape:
            raise ShapeException(
                f"shape: gradient {grad.shape} vs parameter {params[name].shape} for {name}"
            )
        if not np.all(np.isfinite(grad)):
            raise NumericException("non-finite gradient", {"parameter": name})

    state.t += 1
    state.lr = lr
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.t
    correction2 = 1.0 - b2**state.t
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        m = state.m.setdefault(name, np.zeros_like(param.data))
        v = state.v.setdefault(name, np.zeros_like(param.data))
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        param.data = param.data - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale ``grads`` in place to global L2 norm ``max_norm``; 0 disables.

    Returns the norm before clipping.
    """
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for name in grads:
            grads[name] = grads[name] * scale
    return total
