"""Corpus evaluation: autoregressive perplexity and masked-LM pseudo-perplexity."""

from .autoregressive import corpus_perplexity_ar, sentence_log_prob_ar
from .base import MaskedModel, SegmentModel
from .pseudo import (
    PSEUDO_BATCH_SIZE,
    corpus_pseudo_perplexity,
    masked_token_accuracy,
    pad_batch,
    sentence_left_context_log_prob,
    sentence_pseudo_log_prob,
)
from .report_io import read_report, write_report

__all__ = [
    "PSEUDO_BATCH_SIZE",
    "MaskedModel",
    "SegmentModel",
    "corpus_perplexity_ar",
    "corpus_pseudo_perplexity",
    "masked_token_accuracy",
    "pad_batch",
    "read_report",
    "sentence_left_context_log_prob",
    "sentence_log_prob_ar",
    "sentence_pseudo_log_prob",
    "write_report",
]
