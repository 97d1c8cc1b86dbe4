"""Masked-LM encoder and Transformer-XL language models."""

from .base import BaseLanguageModel
from .mlm import MaskedBatch, MaskedLanguageModel, MlmMetrics, mask_tokens, mlm_loss, mlm_metrics
from .xl import TransformerXL, XLMemory, init_memory, relative_layout, xl_loss

__all__ = [
    "BaseLanguageModel",
    "MaskedBatch",
    "MaskedLanguageModel",
    "MlmMetrics",
    "TransformerXL",
    "XLMemory",
    "init_memory",
    "mask_tokens",
    "mlm_loss",
    "mlm_metrics",
    "relative_layout",
    "xl_loss",
]
