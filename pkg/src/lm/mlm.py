"""Bidirectional encoder trained with the masked-LM objective only.

Input is a single segment, SOS + tokens + EOS, with no sentence-pair
machinery. The output projection is tied to the token embedding.
"""

import math
from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..models.base import Mode, ModelKind
from ..models.configs import EncoderConfig, MaskPolicy
from ..numcore import IGNORE_ID, Tensor
from ..subseg.vocab import MASK_ID, NUM_SPECIAL, PAD_ID
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
    split_heads,
    zeros,
)


@dataclass
class MaskedBatch:
    input_ids: np.ndarray  # [B, T] after corruption
    padding_mask: np.ndarray  # [B, T], True at real positions
    targets: np.ndarray  # [B, T], original id where selected, else IGNORE_ID
    selected: np.ndarray  # [B, T], positions chosen for prediction

    @property
    def num_targets(self) -> int:
        return int(self.selected.sum())


@dataclass
class MlmMetrics:
    masked_lm_loss: float
    masked_lm_accuracy: float
    count: int


def mask_tokens(
    ids: np.ndarray,
    policy: MaskPolicy,
    rng: np.random.Generator,
    vocab_size: int,
) -> MaskedBatch:
    """Select non-special positions with ``policy.mask_prob`` and corrupt them.

    Draw order (part of the contract): selection uniforms over the whole
    batch, then action uniforms over the whole batch, then replacement ids
    drawn from the non-special range.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if np.any(ids == MASK_ID):
        raise ValidationException("input ids must not contain MASK")
    if not 0.0 <= policy.mask_prob <= 1.0:
        raise ValidationException(f"mask_prob must be in [0, 1], got {policy.mask_prob}")

    select_draw = rng.random(ids.shape)
    action_draw = rng.random(ids.shape)
    if vocab_size > NUM_SPECIAL:
        replacement = rng.integers(NUM_SPECIAL, vocab_size, size=ids.shape)
    else:
        replacement = np.full(ids.shape, MASK_ID)

    eligible = ids >= NUM_SPECIAL
    selected = eligible & (select_draw < policy.mask_prob)
    to_mask = selected & (action_draw < policy.mask_fraction)
    to_random = (
        selected
        & (action_draw >= policy.mask_fraction)
        & (action_draw < policy.mask_fraction + policy.random_fraction)
    )
    corrupted = np.where(to_mask, MASK_ID, ids)
    corrupted = np.where(to_random, replacement, corrupted)
    return MaskedBatch(
        input_ids=corrupted,
        padding_mask=ids != PAD_ID,
        targets=np.where(selected, ids, IGNORE_ID),
        selected=selected,
    )


class MaskedLanguageModel(BaseLanguageModel[EncoderConfig]):
    """Post-LN transformer encoder with learned absolute positions."""

    kind = ModelKind.MLM

    def init_parameters(self, rng: np.random.Generator) -> dict[str, Tensor]:
        c = self.config
        h = c.hidden_size
        params: dict[str, Tensor] = {
            "embeddings.token": normal(rng, c.vocab_size, h),
            "embeddings.position": normal(rng, c.max_position, h),
            **norm_parameters("embeddings.norm", h),
        }
        for i in range(c.num_layers):
            p = f"layers.{i}"
            for name in ("query", "key", "value", "output"):
                params[f"{p}.attention.{name}.weight"] = normal(rng, h, h)
                params[f"{p}.attention.{name}.bias"] = zeros(h)
            params |= norm_parameters(f"{p}.attention.norm", h)
            params |= feed_forward_parameters(rng, p, h, c.intermediate_size)
            params |= norm_parameters(f"{p}.ff.norm", h)
        params["head.transform.weight"] = normal(rng, h, h)
        params["head.transform.bias"] = zeros(h)
        params |= norm_parameters("head.norm", h)
        params["head.output.bias"] = zeros(c.vocab_size)
        return params

    def encode(
        self,
        input_ids: np.ndarray,
        padding_mask: np.ndarray | None = None,
        mode: Mode = Mode.EVAL,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Logits [B, T, V]. Keys at padded positions are never attended to."""
        c, p = self.config, self.params
        ids = np.asarray(input_ids, dtype=np.int64)
        if ids.ndim != 2:
            raise ValidationException(f"input_ids must be [B, T], got {ids.shape}")
        batch, length = ids.shape
        if length > c.max_position:
            raise ValidationException(
                "sequence too long", {"length": length, "max_position": c.max_position}
            )
        if padding_mask is None:
            padding_mask = ids != PAD_ID
        training = mode is Mode.TRAIN
        drop = c.dropout_prob

        positions = nc.embedding(p["embeddings.position"], np.arange(length))
        x = nc.embedding(p["embeddings.token"], ids) + positions
        x = nc.dropout(norm(x, p, "embeddings.norm", c.layer_norm_eps), drop, rng, training)

        key_mask = np.asarray(padding_mask, dtype=bool)[:, None, None, :]
        scale = 1.0 / math.sqrt(c.head_size)
        for i in range(c.num_layers):
            prefix = f"layers.{i}"
            attn = f"{prefix}.attention"
            q, k, v = (
                split_heads(
                    linear(x, p[f"{attn}.{name}.weight"], p[f"{attn}.{name}.bias"]),
                    c.num_heads,
                    c.head_size,
                )
                for name in ("query", "key", "value")
            )
            scores = nc.matmul(q, k.transpose(0, 1, 3, 2)) * scale
            probs = nc.dropout(nc.softmax(scores, axis=-1, mask=key_mask), drop, rng, training)
            context = merge_heads(nc.matmul(probs, v))
            out = linear(context, p[f"{attn}.output.weight"], p[f"{attn}.output.bias"])
            x = norm(x + nc.dropout(out, drop, rng, training), p, f"{attn}.norm", c.layer_norm_eps)
            ff = feed_forward(x, p, prefix, drop, rng, training)
            x = norm(x + ff, p, f"{prefix}.ff.norm", c.layer_norm_eps)

        t = nc.gelu(linear(x, p["head.transform.weight"], p["head.transform.bias"]))
        t = norm(t, p, "head.norm", c.layer_norm_eps)
        decoder = p["embeddings.token"].transpose(1, 0)
        return linear(t, decoder, p["head.output.bias"])

    def predict_logits(
        self, input_ids: np.ndarray, padding_mask: np.ndarray | None = None
    ) -> np.ndarray:
        """Eval-mode logits as a plain array, never recorded."""
        with nc.no_grad():
            return self.encode(input_ids, padding_mask, Mode.EVAL).data

    @property
    def max_length(self) -> int:
        return self.config.max_position


def mlm_loss(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Cross-entropy over supervised positions of a [B, T, V] logit tensor."""
    vocab = logits.shape[-1]
    return nc.cross_entropy(logits.reshape(-1, vocab), np.asarray(targets).reshape(-1))


def mlm_metrics(logits: Tensor | np.ndarray, targets: np.ndarray) -> MlmMetrics:
    """Masked-LM loss (natural log) and accuracy over supervised positions."""
    values = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    flat = values.reshape(-1, values.shape[-1])
    supervised = targets != IGNORE_ID
    if not supervised.any():
        raise ValidationException("no supervised positions")
    with nc.no_grad():
        loss = nc.cross_entropy(Tensor._wrap(flat), targets).item()
    hits = flat[supervised].argmax(axis=-1) == targets[supervised]
    return MlmMetrics(
        masked_lm_loss=loss,
        masked_lm_accuracy=float(hits.mean()),
        count=int(supervised.sum()),
    )
