"""Causal transformer LM with segment-level recurrence and relative attention.

Each layer attends over ``[memory ; current segment]``. Memory holds the
inputs of every layer for the most recent ``mem_len`` positions, detached
from the graph, oldest first.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .. import numcore as nc
from ..models.base import Mode, ModelKind
from ..models.configs import XLConfig
from ..numcore import IGNORE_ID, Tensor
from ..subseg.vocab import PAD_ID
from ..utils.exceptions import ValidationException
from .base import BaseLanguageModel
from .layers import (
    feed_forward,
    feed_forward_parameters,
    linear,
    merge_heads,
    norm,
    norm_parameters,
    normal,
    sinusoid_table,
    split_heads,
    zeros,
)


@dataclass
class XLMemory:
    """Per-layer cached hidden states, each ``[B, m, hidden]`` with m <= mem_len."""

    layers: list[np.ndarray] = field(default_factory=list)

    @property
    def length(self) -> int:
        return self.layers[0].shape[1] if self.layers else 0

    @property
    def batch_size(self) -> int:
        return self.layers[0].shape[0] if self.layers else 0


def init_memory(config: XLConfig, batch_size: int) -> XLMemory:
    empty = np.zeros((batch_size, 0, config.hidden_size))
    return XLMemory([empty.copy() for _ in range(config.num_layers)])


def relative_layout(seg_len: int, mem_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Gather index and causal mask for ``seg_len`` queries over ``mem_len + seg_len`` keys.

    Position scores are computed against distances ``K-1, ..., 0``; query i
    reads key j's distance ``mem_len + i - j`` from column ``seg_len-1-i+j``.
    """
    keys = mem_len + seg_len
    i = np.arange(seg_len)[:, None]
    j = np.arange(keys)[None, :]
    index = np.clip(seg_len - 1 - i + j, 0, keys - 1)
    return index, j <= mem_len + i


class TransformerXL(BaseLanguageModel[XLConfig]):
    """Post-LN Transformer-XL with an untied output projection."""

    kind = ModelKind.XL

    def init_parameters(self, rng: np.random.Generator) -> dict[str, Tensor]:
        c = self.config
        h, a = c.hidden_size, c.attention_size
        params: dict[str, Tensor] = {"embeddings.token": normal(rng, c.vocab_size, h)}
        for i in range(c.num_layers):
            p = f"layers.{i}.attention"
            params[f"{p}.query.weight"] = normal(rng, h, a)
            params[f"{p}.key.weight"] = normal(rng, h, a)
            params[f"{p}.value.weight"] = normal(rng, h, a)
            params[f"{p}.position.weight"] = normal(rng, h, a)
            params[f"{p}.output.weight"] = normal(rng, a, h)
            params[f"{p}.content_bias"] = zeros(c.num_heads, c.head_size)
            params[f"{p}.position_bias"] = zeros(c.num_heads, c.head_size)
            params |= norm_parameters(f"{p}.norm", h)
            params |= feed_forward_parameters(rng, f"layers.{i}", h, c.intermediate_size)
            params |= norm_parameters(f"layers.{i}.ff.norm", h)
        params["output.weight"] = normal(rng, h, c.vocab_size)
        params["output.bias"] = zeros(c.vocab_size)
        return params

    def init_memory(self, batch_size: int) -> XLMemory:
        return init_memory(self.config, batch_size)

    def forward_segment(
        self,
        tokens: np.ndarray,
        memory: XLMemory,
        mode: Mode = Mode.EVAL,
        rng: np.random.Generator | None = None,
    ) -> tuple[Tensor, XLMemory]:
        """Logits ``[B, s, V]`` predicting the next token, and the updated memory."""
        c, p = self.config, self.params
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.ndim != 2 or tokens.shape[1] == 0:
            raise ValidationException(f"tokens must be a non-empty [B, s] array, got {tokens.shape}")
        batch, seg = tokens.shape
        if seg > c.seg_len:
            raise ValidationException(
                "segment longer than seg_len", {"length": seg, "seg_len": c.seg_len}
            )
        if len(memory.layers) != c.num_layers:
            raise ValidationException("memory layer count does not match the model")
        if memory.batch_size != batch:
            raise ValidationException(
                "memory batch mismatch", {"memory": memory.batch_size, "tokens": batch}
            )

        training = mode is Mode.TRAIN
        drop = c.dropout_prob
        mem_len = memory.length
        index, causal = relative_layout(seg, mem_len)
        key_mask = causal[None, None, :, :]
        distances = np.arange(mem_len + seg - 1, -1, -1)
        positions = Tensor._wrap(sinusoid_table(distances, c.hidden_size))
        positions = nc.dropout(positions, drop, rng, training)
        scale = 1.0 / math.sqrt(c.head_size)
        heads = (1, c.num_heads, 1, c.head_size)

        x = nc.embedding(p["embeddings.token"], tokens) * math.sqrt(c.hidden_size)
        x = nc.dropout(x, drop, rng, training)

        layer_inputs: list[np.ndarray] = []
        for i in range(c.num_layers):
            attn = f"layers.{i}.attention"
            layer_inputs.append(x.data)
            if mem_len:
                context = nc.concat([Tensor._wrap(memory.layers[i]), x], axis=1)
            else:
                context = x

            q = split_heads(linear(x, p[f"{attn}.query.weight"]), c.num_heads, c.head_size)
            k = split_heads(linear(context, p[f"{attn}.key.weight"]), c.num_heads, c.head_size)
            v = split_heads(linear(context, p[f"{attn}.value.weight"]), c.num_heads, c.head_size)
            r = linear(positions, p[f"{attn}.position.weight"])
            r = r.reshape(mem_len + seg, c.num_heads, c.head_size).transpose(1, 2, 0)

            content = nc.matmul(q + p[f"{attn}.content_bias"].reshape(*heads), k.transpose(0, 1, 3, 2))
            by_distance = nc.matmul(q + p[f"{attn}.position_bias"].reshape(*heads), r)
            scores = (content + nc.gather_last(by_distance, index)) * scale

            probs = nc.dropout(nc.softmax(scores, axis=-1, mask=key_mask), drop, rng, training)
            out = linear(merge_heads(nc.matmul(probs, v)), p[f"{attn}.output.weight"])
            x = norm(x + nc.dropout(out, drop, rng, training), p, f"{attn}.norm", c.layer_norm_eps)
            ff = feed_forward(x, p, f"layers.{i}", drop, rng, training)
            x = norm(x + ff, p, f"layers.{i}.ff.norm", c.layer_norm_eps)

        logits = linear(x, p["output.weight"], p["output.bias"])
        return logits, self._update_memory(memory, layer_inputs)

    def _update_memory(self, memory: XLMemory, layer_inputs: list[np.ndarray]) -> XLMemory:
        keep = self.config.mem_len
        updated = []
        for cached, current in zip(memory.layers, layer_inputs, strict=True):
            if cached.shape[1] == 0:
                joined = current
            else:
                joined = np.concatenate([cached, current], axis=1)
            start = max(0, joined.shape[1] - keep)
            updated.append(np.array(joined[:, start:], copy=True))
        return XLMemory(updated)


def xl_loss(logits: Tensor, next_token_targets: np.ndarray) -> Tensor:
    """Mean next-token NLL over non-PAD targets of a ``[B, s, V]`` logit tensor."""
    targets = np.asarray(next_token_targets, dtype=np.int64).reshape(-1)
    targets = np.where(targets == PAD_ID, IGNORE_ID, targets)
    vocab = logits.shape[-1]
    return nc.cross_entropy(logits.reshape(-1, vocab), targets)
