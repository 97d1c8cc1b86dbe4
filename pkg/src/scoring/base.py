"""What the scorers need from a model, and shared numeric helpers."""

from collections.abc import Sequence
from typing import Any, Protocol

import numpy as np

from ..numcore import Tensor
from ..subseg.vocab import EOS_ID, MASK_ID, PAD_ID, SOS_ID
from ..utils.exceptions import ValidationException

UNSCORED_IDS = (PAD_ID, MASK_ID, SOS_ID, EOS_ID)


class SegmentModel(Protocol):
    """A causal LM that reads segments and carries memory between them."""

    @property
    def config(self) -> Any: ...

    def init_memory(self, batch_size: int) -> Any: ...

    def forward_segment(self, tokens: np.ndarray, memory: Any) -> tuple[Tensor, Any]: ...


class MaskedModel(Protocol):
    """A bidirectional LM that returns eval-mode logits for a padded batch."""

    @property
    def max_length(self) -> int: ...

    def predict_logits(
        self, input_ids: np.ndarray, padding_mask: np.ndarray | None = None
    ) -> np.ndarray: ...


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def check_framed(token_ids: Sequence[int]) -> np.ndarray:
    """``token_ids`` as an int array, required to be SOS + tokens + EOS."""
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size < 2 or ids[0] != SOS_ID or ids[-1] != EOS_ID:
        raise ValidationException("sentence must be framed as SOS + tokens + EOS")
    return ids


def scored_positions(ids: np.ndarray) -> np.ndarray:
    """Indices of real tokens; UNK counts as real, other specials do not."""
    return np.nonzero(~np.isin(ids, UNSCORED_IDS))[0]
