"""Marked-subword vocabulary with reserved special tokens."""

from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import structlog
from pydantic import BaseModel, PrivateAttr, model_validator

from ..models.base import MarkingScheme
from ..utils.exceptions import DataException
from ..utils.helpers import ensure_parent
from .baseline import SegmentationModel
from .marking import mark_sentence

logger = structlog.get_logger(__name__)

PAD, UNK, MASK, SOS, EOS = "<pad>", "<unk>", "<mask>", "<s>", "</s>"
SPECIAL_TOKENS = (PAD, UNK, MASK, SOS, EOS)
PAD_ID, UNK_ID, MASK_ID, SOS_ID, EOS_ID = range(5)
NUM_SPECIAL = len(SPECIAL_TOKENS)


class SubwordVocab(BaseModel):
    """Dense id assignment: ``tokens[i]`` has id ``i``; ids 0-4 are specials."""

    tokens: list[str]
    scheme: MarkingScheme

    _token_to_id: dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def check_tokens(self) -> "SubwordVocab":
        if tuple(self.tokens[:NUM_SPECIAL]) != SPECIAL_TOKENS:
            raise ValueError(f"first tokens must be {', '.join(SPECIAL_TOKENS)}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._token_to_id = {token: index for index, token in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    @property
    def token_to_id(self) -> dict[str, int]:
        return dict(self._token_to_id)

    def id_of(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str]) -> tuple[list[int], int]:
        """Ids for ``tokens`` and how many fell back to UNK."""
        ids = [self.id_of(token) for token in tokens]
        return ids, sum(1 for token, i in zip(tokens, ids) if i == UNK_ID and token != UNK)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    @staticmethod
    def is_special(token_id: int) -> bool:
        return 0 <= token_id < NUM_SPECIAL


def build_vocab(
    corpus: Iterable[str], model: SegmentationModel, scheme: MarkingScheme
) -> SubwordVocab:
    """Specials, then marked tokens by descending frequency, ties lexicographic."""
    counts: Counter[str] = Counter()
    sentences = 0
    for sentence in corpus:
        counts.update(mark_sentence(model, sentence, scheme))
        sentences += 1
    if sentences == 0:
        logger.warning("Empty corpus, vocabulary holds only special tokens")
    clashes = sorted(set(counts) & set(SPECIAL_TOKENS))
    if clashes:
        raise DataException("corpus token collides with a special token", {"tokens": clashes})
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    vocab = SubwordVocab(
        tokens=list(SPECIAL_TOKENS) + [token for token, _ in ordered], scheme=scheme
    )
    logger.info("Vocabulary built", size=len(vocab), scheme=scheme.value)
    return vocab


def save_vocab(vocab: SubwordVocab, path: str | Path) -> None:
    path = ensure_parent(path)
    path.write_text("".join(f"{token}\n" for token in vocab.tokens), encoding="utf-8")


def load_vocab(path: str | Path, scheme: MarkingScheme) -> SubwordVocab:
    path = Path(path)
    try:
        tokens = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataException(f"{path}: cannot read vocabulary: {exc}") from exc
    try:
        return SubwordVocab(tokens=tokens, scheme=scheme)
    except ValueError as exc:
        raise DataException(f"{path}: invalid vocabulary: {exc}") from exc
