"""Central finite-difference gradient checking."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .tensor import Tape, Tensor


@dataclass
class GradCheckResult:
    max_rel_error: float
    checked: int
    worst: str

    def ok(self, rtol: float = 1e-4) -> bool:
        return self.max_rel_error < rtol


def gradcheck(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = 1e-5,
    floor: float = 1e-3,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckResult:
    """Compare tape gradients of scalar ``fn()`` against central differences.

    The relative error of an entry is ``|a - n| / max(|a|, |n|, floor)``;
    ``floor`` keeps near-zero gradients from dominating. With
    ``max_entries`` only that many randomly chosen entries per tensor are
    perturbed.
    """
    for tensor in tensors:
        tensor.requires_grad = True
        tensor.grad = None
    with Tape() as tape:
        loss = fn()
    tape.backward(loss)
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors
    ]

    rng = rng or np.random.default_rng(0)
    worst, worst_where, checked = 0.0, "", 0
    for position, tensor in enumerate(tensors):
        flat = tensor.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = rng.choice(flat.size, size=max_entries, replace=False)
        for entry in entries:
            saved = flat[entry]
            flat[entry] = saved + h
            plus = fn().item()
            flat[entry] = saved - h
            minus = fn().item()
            flat[entry] = saved
            numeric = (plus - minus) / (2.0 * h)
            exact = analytic[position].reshape(-1)[entry]
            error = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
            checked += 1
            if error > worst:
                worst = error
                worst_where = f"{tensor.name or position}[{int(entry)}]"
    return GradCheckResult(max_rel_error=worst, checked=checked, worst=worst_where)
