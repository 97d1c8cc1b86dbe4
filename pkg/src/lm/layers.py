"""Building blocks shared by the encoder and Transformer-XL."""

import numpy as np

from .. import numcore as nc
from ..numcore import Tensor


def normal(rng: np.random.Generator, *shape: int, std: float = 0.02) -> Tensor:
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)


def zeros(*shape: int) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def ones(*shape: int) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = nc.matmul(x, weight)
    return out if bias is None else out + bias


def split_heads(x: Tensor, num_heads: int, head_size: int) -> Tensor:
    """[B, T, heads*size] -> [B, heads, T, size]"""
    batch, length = x.shape[0], x.shape[1]
    return x.reshape(batch, length, num_heads, head_size).transpose(0, 2, 1, 3)


def merge_heads(x: Tensor) -> Tensor:
    """[B, heads, T, size] -> [B, T, heads*size]"""
    batch, heads, length, size = x.shape
    return x.transpose(0, 2, 1, 3).reshape(batch, length, heads * size)


def feed_forward(
    x: Tensor,
    params: dict[str, Tensor],
    prefix: str,
    dropout_prob: float,
    rng: np.random.Generator | None,
    training: bool,
) -> Tensor:
    hidden = nc.gelu(linear(x, params[f"{prefix}.ff.in.weight"], params[f"{prefix}.ff.in.bias"]))
    out = linear(hidden, params[f"{prefix}.ff.out.weight"], params[f"{prefix}.ff.out.bias"])
    return nc.dropout(out, dropout_prob, rng, training)


def feed_forward_parameters(
    rng: np.random.Generator, prefix: str, hidden: int, intermediate: int
) -> dict[str, Tensor]:
    return {
        f"{prefix}.ff.in.weight": normal(rng, hidden, intermediate),
        f"{prefix}.ff.in.bias": zeros(intermediate),
        f"{prefix}.ff.out.weight": normal(rng, intermediate, hidden),
        f"{prefix}.ff.out.bias": zeros(hidden),
    }


def norm(x: Tensor, params: dict[str, Tensor], prefix: str, eps: float) -> Tensor:
    return nc.layer_norm(x, params[f"{prefix}.gamma"], params[f"{prefix}.beta"], eps)


def norm_parameters(prefix: str, width: int) -> dict[str, Tensor]:
    return {f"{prefix}.gamma": ones(width), f"{prefix}.beta": zeros(width)}


def sinusoid_table(positions: np.ndarray, dim: int) -> np.ndarray:
    """[len(positions), dim]: sines in the first half, cosines in the second."""
    inv_freq = 1.0 / (10000.0 ** (np.arange(0.0, dim, 2.0) / dim))
    angles = np.outer(positions.astype(np.float64), inv_freq)
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)
