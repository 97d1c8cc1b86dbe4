"""Pytest configuration and fixtures."""

from pathlib import Path

import numpy as np
import pytest

from src.corpus.batching import EncodedCorpus, encode_corpus
from src.corpus.preprocess import word_counts
from src.models.base import MarkingScheme
from src.models.configs import EncoderConfig, RunConfig, XLConfig
from src.subseg.baseline import SegmentationModel, save_lexicon, train_segmentation
from src.subseg.vocab import SubwordVocab, build_vocab, save_vocab
from src.training.trainer import PreparedData

STEMS = ["talo", "auto", "kissa", "koira", "kirja", "metsä", "järvi", "pöytä", "tyttö", "poika"]
SUFFIXES = ["", "ssa", "sta", "lla", "lle", "n", "t", "ni", "mme", "kin"]
VERBS = ["istuu", "juoksee", "lukee", "näkee", "katsoo", "odottaa"]


def finnish_like_sentences(count: int, seed: int = 0) -> list[str]:
    """Agglutinative toy sentences: stems with case-like suffixes around a verb."""
    rng = np.random.default_rng(seed)
    sentences = []
    for _ in range(count):
        words = []
        for position in range(int(rng.integers(2, 6))):
            if position == 1:
                words.append(VERBS[rng.integers(len(VERBS))])
            else:
                words.append(STEMS[rng.integers(len(STEMS))] + SUFFIXES[rng.integers(len(SUFFIXES))])
        sentences.append(" ".join(words))
    return sentences


@pytest.fixture(scope="session")
def fixture_sentences() -> list[str]:
    return finnish_like_sentences(200, seed=7)


@pytest.fixture(scope="session")
def segmenter(fixture_sentences: list[str]) -> SegmentationModel:
    return train_segmentation(word_counts(fixture_sentences), alpha=1.0, seed=0)


@pytest.fixture(scope="session")
def vocab_mm(fixture_sentences: list[str], segmenter: SegmentationModel) -> SubwordVocab:
    return build_vocab(fixture_sentences, segmenter, MarkingScheme.LEFT_RIGHT)


@pytest.fixture(scope="session")
def encoded_fixture(
    fixture_sentences: list[str], segmenter: SegmentationModel, vocab_mm: SubwordVocab
) -> EncodedCorpus:
    return encode_corpus(fixture_sentences, segmenter, vocab_mm, MarkingScheme.LEFT_RIGHT)


@pytest.fixture
def tiny_encoder_config() -> EncoderConfig:
    return EncoderConfig(
        vocab_size=23,
        num_layers=2,
        hidden_size=8,
        num_heads=2,
        intermediate_size=16,
        dropout_prob=0.0,
        max_position=16,
    )


@pytest.fixture
def tiny_xl_config() -> XLConfig:
    return XLConfig(
        vocab_size=19,
        num_layers=2,
        hidden_size=8,
        num_heads=2,
        head_size=4,
        intermediate_size=16,
        seg_len=4,
        mem_len=4,
        dropout_prob=0.0,
    )


@pytest.fixture
def run_files(
    tmp_path: Path,
    fixture_sentences: list[str],
    segmenter: SegmentationModel,
    vocab_mm: SubwordVocab,
) -> dict[str, str]:
    """Corpus, lexicon and vocabulary on disk, as run-config path entries."""
    data = tmp_path / "corpus.txt"
    data.write_text("\n".join(fixture_sentences[:60]) + "\n", encoding="utf-8")
    lexicon = tmp_path / "model.lex"
    vocab = tmp_path / "vocab.txt"
    save_lexicon(segmenter, lexicon)
    save_vocab(vocab_mm, vocab)
    return {
        "data_path": str(data),
        "lexicon_path": str(lexicon),
        "vocab_path": str(vocab),
        "checkpoint_dir": str(tmp_path / "checkpoints"),
    }


def small_run(files: dict[str, str], kind: str, **overrides: object) -> RunConfig:
    """A run small enough for a unit test."""
    values: dict[str, object] = {
        "kind": kind,
        "batch_size": 4,
        "total_steps": 6,
        "warmup_steps": 2,
        "valid_every": 3,
        "num_layers": 1,
        "hidden_size": 8,
        "num_heads": 2,
        "intermediate_size": 16,
        "dropout_prob": 0.1,
        "seed": 3,
    }
    if kind == "xl":
        values |= {"head_size": 4, "seg_len": 6, "mem_len": 6}
    else:
        values |= {"max_position": 32}
    return RunConfig(**(files | values | overrides))  # type: ignore[arg-type]


def prepared(encoded: EncodedCorpus, vocab: SubwordVocab, valid_count: int = 10) -> PreparedData:
    return PreparedData(
        train=EncodedCorpus(encoded.sentences[valid_count:]),
        valid=EncodedCorpus(encoded.sentences[:valid_count]),
        vocab=vocab,
    )
