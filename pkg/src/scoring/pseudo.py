"""Pseudo-log-likelihood scoring for bidirectional masked LMs.

Every real position is hidden on its own while the rest of the sentence
stays visible, and the model's log-probability of the hidden token is
summed over positions.
"""

import math
from collections.abc import Sequence

import numpy as np
import structlog

from ..lm.mlm import MlmMetrics, mask_tokens
from ..models.base import EvalMode
from ..models.configs import MaskPolicy
from ..models.reports import EvalReport, SentenceScore
from ..numcore import IGNORE_ID
from ..subseg.vocab import MASK_ID, PAD_ID
from ..utils.exceptions import ValidationException
from ..utils.helpers import chunk_list, make_rng
from .base import MaskedModel, log_softmax, scored_positions

logger = structlog.get_logger(__name__)

PSEUDO_BATCH_SIZE = 64


def _check_input(model: MaskedModel, token_ids: Sequence[int]) -> np.ndarray:
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ValidationException(f"expected a single sentence, got shape {ids.shape}")
    if ids.size > model.max_length:
        raise ValidationException(
            "sequence too long", {"length": int(ids.size), "max_length": model.max_length}
        )
    if np.any(ids == MASK_ID):
        raise ValidationException("input ids must not contain MASK")
    return ids


def _masked_log_probs(
    model: MaskedModel,
    ids: np.ndarray,
    positions: np.ndarray,
    variants: np.ndarray,
    batch_size: int,
) -> list[float]:
    """log p(ids[positions[k]]) read from row k of ``variants``."""
    out: list[float] = []
    for rows in chunk_list(range(len(positions)), batch_size):
        batch = variants[rows]
        logits = model.predict_logits(batch, np.ones_like(batch, dtype=bool))
        where = positions[rows]
        table = log_softmax(logits[np.arange(len(rows)), where])
        out.extend(table[np.arange(len(rows)), ids[where]].tolist())
    return out


def sentence_pseudo_log_prob(
    model: MaskedModel,
    token_ids: Sequence[int],
    batch_size: int = PSEUDO_BATCH_SIZE,
) -> tuple[float, int]:
    """Sum over real positions i of log p(x_i | every other token)."""
    ids = _check_input(model, token_ids)
    positions = scored_positions(ids)
    if positions.size == 0:
        return 0.0, 0
    variants = np.repeat(ids[None, :], positions.size, axis=0)
    variants[np.arange(positions.size), positions] = MASK_ID
    return math.fsum(_masked_log_probs(model, ids, positions, variants, batch_size)), int(
        positions.size
    )


def sentence_left_context_log_prob(
    model: MaskedModel,
    token_ids: Sequence[int],
    batch_size: int = PSEUDO_BATCH_SIZE,
) -> tuple[float, int]:
    """Causal approximation: position i and every later real token are hidden.

    Only a comparison baseline for the pseudo score.
    """
    ids = _check_input(model, token_ids)
    positions = scored_positions(ids)
    if positions.size == 0:
        return 0.0, 0
    variants = np.repeat(ids[None, :], positions.size, axis=0)
    for row, position in enumerate(positions):
        variants[row, positions[positions >= position]] = MASK_ID
    return math.fsum(_masked_log_probs(model, ids, positions, variants, batch_size)), int(
        positions.size
    )


def corpus_pseudo_perplexity(
    model: MaskedModel,
    sentences: Sequence[Sequence[int]],
    unk_count: int = 0,
    batch_size: int = PSEUDO_BATCH_SIZE,
) -> EvalReport:
    if not sentences:
        raise ValidationException("empty corpus")
    scores = []
    for index, token_ids in enumerate(sentences):
        log_prob, length = sentence_pseudo_log_prob(model, token_ids, batch_size)
        scores.append(SentenceScore(sentence_id=index, log_prob=log_prob, length=length))
    if sum(s.length for s in scores) == 0:
        raise ValidationException("corpus has no scorable tokens")
    report = EvalReport.from_scores(EvalMode.PSEUDO, scores, unk_count)
    logger.info(
        "Pseudo-perplexity evaluation finished",
        sentences=len(scores),
        tokens=report.token_count,
        pseudo_perplexity=report.perplexity,
    )
    return report


def pad_batch(sentences: Sequence[Sequence[int]]) -> np.ndarray:
    width = max(len(s) for s in sentences)
    batch = np.full((len(sentences), width), PAD_ID, dtype=np.int64)
    for row, ids in enumerate(sentences):
        batch[row, : len(ids)] = ids
    return batch


def masked_token_accuracy(
    model: MaskedModel,
    sentences: Sequence[Sequence[int]],
    policy: MaskPolicy,
    vocab_size: int,
    seed: int = 0,
    batch_size: int = 16,
) -> MlmMetrics:
    """Masked-LM loss and accuracy on held-out sentences under ``policy``."""
    if not sentences:
        raise ValidationException("empty corpus")
    rng = make_rng(seed)
    nll: list[float] = []
    hits = 0
    for group in chunk_list(list(sentences), batch_size):
        batch = mask_tokens(pad_batch(group), policy, rng, vocab_size)
        if batch.num_targets == 0:
            continue
        logits = model.predict_logits(batch.input_ids, batch.padding_mask)
        supervised = batch.targets != IGNORE_ID
        table = log_softmax(logits[supervised])
        targets = batch.targets[supervised]
        nll.extend((-table[np.arange(targets.size), targets]).tolist())
        hits += int((table.argmax(axis=-1) == targets).sum())
    if not nll:
        raise ValidationException("no supervised positions")
    return MlmMetrics(
        masked_lm_loss=math.fsum(nll) / len(nll),
        masked_lm_accuracy=hits / len(nll),
        count=len(nll),
    )
