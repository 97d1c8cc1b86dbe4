"""Autoregressive log-probability and perplexity for segment models."""

import math
from collections.abc import Sequence
from typing import Any

import numpy as np
import structlog

from ..models.base import EvalMode
from ..models.reports import EvalReport, SentenceScore
from ..numcore import no_grad
from ..utils.exceptions import ValidationException
from .base import SegmentModel, check_framed, log_softmax

logger = structlog.get_logger(__name__)


def _score_framed(
    model: SegmentModel, ids: np.ndarray, memory: Any
) -> tuple[float, int, Any]:
    inputs, targets = ids[:-1], ids[1:]
    seg_len = model.config.seg_len
    log_probs: list[float] = []
    with no_grad():
        for start in range(0, inputs.size, seg_len):
            chunk = inputs[start : start + seg_len]
            logits, memory = model.forward_segment(chunk[None, :], memory)
            table = log_softmax(logits.data[0])
            wanted = targets[start : start + seg_len]
            log_probs.extend(table[np.arange(wanted.size), wanted].tolist())
    return math.fsum(log_probs), targets.size, memory


def sentence_log_prob_ar(
    model: SegmentModel, token_ids: Sequence[int]
) -> tuple[float, int]:
    """Sum of log p(x_i | x_<i) over every position after SOS, EOS included.

    Memory starts empty, so the result depends on this sentence alone.
    """
    ids = check_framed(token_ids)
    log_prob, length, _ = _score_framed(model, ids, model.init_memory(1))
    return log_prob, length


def corpus_perplexity_ar(
    model: SegmentModel,
    sentences: Sequence[Sequence[int]],
    unk_count: int = 0,
    stream: bool = False,
) -> EvalReport:
    """Perplexity over framed sentences.

    With ``stream`` the memory carries over from one sentence into the
    next; otherwise every sentence is scored from empty memory.
    """
    if not sentences:
        raise ValidationException("empty corpus")
    memory = model.init_memory(1)
    scores = []
    for index, token_ids in enumerate(sentences):
        ids = check_framed(token_ids)
        if not stream:
            memory = model.init_memory(1)
        log_prob, length, memory = _score_framed(model, ids, memory)
        scores.append(SentenceScore(sentence_id=index, log_prob=log_prob, length=length))
    report = EvalReport.from_scores(EvalMode.AUTOREGRESSIVE, scores, unk_count)
    logger.info(
        "Autoregressive evaluation finished",
        sentences=len(scores),
        tokens=report.token_count,
        perplexity=report.perplexity,
        stream=stream,
    )
    return report
