"""Sentence framing, per-epoch shuffling and batch assembly."""

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
import structlog

from ..models.base import MarkingScheme
from ..models.corpus import Corpus
from ..subseg.baseline import SegmentationModel
from ..subseg.marking import detokenize, mark_sentence
from ..subseg.vocab import EOS_ID, PAD_ID, SOS_ID, SubwordVocab
from ..utils.exceptions import ValidationException
from ..utils.helpers import make_rng

logger = structlog.get_logger(__name__)


@dataclass
class EncodedCorpus:
    """Framed id sequences in corpus order plus the number of UNK fallbacks."""

    sentences: list[np.ndarray] = field(default_factory=list)
    unk_count: int = 0

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def token_count(self) -> int:
        return sum(s.size for s in self.sentences)


def encode_sentence(
    sentence: str, model: SegmentationModel, vocab: SubwordVocab, scheme: MarkingScheme
) -> tuple[np.ndarray, int]:
    """SOS + marked subword ids + EOS, and how many tokens became UNK."""
    if vocab.scheme is not scheme:
        raise ValidationException(
            f"vocabulary was built for scheme {vocab.scheme.value}, not {scheme.value}"
        )
    ids, unknown = vocab.encode(mark_sentence(model, sentence, scheme))
    return np.array([SOS_ID, *ids, EOS_ID], dtype=np.int64), unknown


def decode_sentence(ids: Sequence[int], vocab: SubwordVocab, scheme: MarkingScheme) -> str:
    """Inverse of ``encode_sentence`` for sentences without UNK."""
    tokens = [vocab.tokens[i] for i in ids if i not in (PAD_ID, SOS_ID, EOS_ID)]
    return detokenize(tokens, scheme)


def encode_corpus(
    corpus: Corpus | Sequence[str],
    model: SegmentationModel,
    vocab: SubwordVocab,
    scheme: MarkingScheme,
) -> EncodedCorpus:
    sentences = corpus.sentences if isinstance(corpus, Corpus) else corpus
    encoded = EncodedCorpus()
    for sentence in sentences:
        ids, unknown = encode_sentence(sentence, model, vocab, scheme)
        encoded.sentences.append(ids)
        encoded.unk_count += unknown
    if encoded.unk_count:
        logger.info("Tokens mapped to UNK", count=encoded.unk_count)
    return encoded


def pad_sequences(sequences: Sequence[np.ndarray]) -> np.ndarray:
    width = max(s.size for s in sequences)
    batch = np.full((len(sequences), width), PAD_ID, dtype=np.int64)
    for row, ids in enumerate(sequences):
        batch[row, : ids.size] = ids
    return batch


def shuffled_batches(
    encoded: EncodedCorpus,
    batch_size: int,
    seed: int,
    epoch: int,
    max_len: int | None = None,
) -> Iterator[np.ndarray]:
    """Padded ``[B, T]`` batches in the order fixed by ``(seed, epoch)``.

    Sentences longer than ``max_len`` (framing included) are skipped.
    """
    if batch_size <= 0:
        raise ValidationException("batch_size must be positive")
    order = make_rng(seed, epoch).permutation(len(encoded))
    kept = [encoded.sentences[i] for i in order if max_len is None or encoded.sentences[i].size <= max_len]
    skipped = len(order) - len(kept)
    if skipped:
        logger.warning("Over-length sentences skipped", count=skipped, max_len=max_len, epoch=epoch)
    for start in range(0, len(kept), batch_size):
        yield pad_sequences(kept[start : start + batch_size])


def epoch_batches(
    corpus: Corpus,
    vocab: SubwordVocab,
    segmenter: SegmentationModel,
    scheme: MarkingScheme,
    batch_size: int,
    seed: int,
    epoch: int,
    max_len: int | None = None,
) -> Iterator[np.ndarray]:
    """Shuffle, segment, mark, frame and pad one epoch of ``corpus``."""
    encoded = encode_corpus(corpus, segmenter, vocab, scheme)
    yield from shuffled_batches(encoded, batch_size, seed, epoch, max_len)


def token_stream(encoded: EncodedCorpus, seed: int, epoch: int) -> np.ndarray:
    """All framed sentences of one epoch, shuffled and concatenated."""
    if not len(encoded):
        raise ValidationException("empty corpus")
    order = make_rng(seed, epoch).permutation(len(encoded))
    return np.concatenate([encoded.sentences[i] for i in order])


def stream_segments(
    stream: np.ndarray, batch_size: int, seg_len: int
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """``(inputs, targets)`` segments over ``batch_size`` parallel columns of ``stream``.

    Targets are the inputs shifted by one; the remainder that does not
    fill every column is dropped.
    """
    columns = (stream.size - 1) // batch_size
    if columns < 1:
        raise ValidationException("token stream shorter than the batch size")
    inputs = stream[: batch_size * columns].reshape(batch_size, columns)
    targets = stream[1 : batch_size * columns + 1].reshape(batch_size, columns)
    for start in range(0, columns, seg_len):
        yield inputs[:, start : start + seg_len], targets[:, start : start + seg_len]
