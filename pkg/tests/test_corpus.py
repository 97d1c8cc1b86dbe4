"""Test preprocessing, splitting, batching and record files."""

from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.corpus.batching import (
    EncodedCorpus,
    decode_sentence,
    encode_sentence,
    epoch_batches,
    pad_sequences,
    shuffled_batches,
    stream_segments,
    token_stream,
)
from src.corpus.preprocess import (
    load_and_split,
    load_corpus,
    preprocess_line,
    read_manifest,
    word_counts,
    write_manifest,
)
from src.corpus.records import (
    RECORD_MAGIC,
    decode_records,
    encode_records,
    read_records,
    write_records,
)
from src.models.base import MarkingScheme
from src.models.corpus import Corpus
from src.subseg.vocab import EOS_ID, NUM_SPECIAL, PAD_ID, SOS_ID
from src.utils.exceptions import DataException, RecordFormatException, ValidationException


def write_lines(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_preprocess_examples():
    """Test punctuation removal, whitespace collapsing and empty lines."""
    assert preprocess_line("Kissa istuu, ja katsoo.") == "Kissa istuu ja katsoo"
    assert preprocess_line("———") is None
    assert preprocess_line("  talo   on\tiso  ") == "talo on iso"
    assert preprocess_line("a + b = 3 €") == "a b 3"
    assert preprocess_line("") is None


@given(st.text())
def test_preprocess_is_idempotent(text):
    """Test that preprocessing an already preprocessed line changes nothing."""
    once = preprocess_line(text)
    if once is not None:
        assert preprocess_line(once) == once
        assert "+" not in once


def test_load_corpus_counts_and_manifest(tmp_path: Path):
    """Test that skipped lines are counted per source."""
    first = write_lines(tmp_path / "a.txt", ["Talo on iso.", "!!!", "Auto"])
    second = write_lines(tmp_path / "b.txt", ["Kissa."])
    corpus = load_corpus([first, second])
    assert corpus.sentences == ["Talo on iso", "Auto", "Kissa"]
    kept = [(s.line_count, s.kept_count) for s in corpus.manifest.sources]
    assert kept == [(3, 2), (1, 1)]


def test_invalid_utf8_names_the_line(tmp_path: Path):
    """Test that undecodable bytes report file and line."""
    path = tmp_path / "bad.txt"
    path.write_bytes(b"talo\n\xff\xfe\n")
    with pytest.raises(DataException, match="bad.txt:2: invalid UTF-8"):
        load_corpus([path])


def test_split_sizes_and_disjointness(tmp_path: Path):
    """Test a 90/10 split whose union is the input in order."""
    lines = [f"lause {chr(97 + i % 26)}{i}" for i in range(100)]
    path = write_lines(tmp_path / "c.txt", lines)
    train, valid = load_and_split([path], 0.1, seed=1)
    assert (len(train), len(valid)) == (90, 10)
    assert sorted(train.sentences + valid.sentences) == sorted(lines)
    assert train.sentences == [s for s in lines if s in set(train.sentences)]
    assert valid.manifest.split_seed == 1
    again = load_and_split([path], 0.1, seed=1)
    assert again[1].sentences == valid.sentences
    others = {tuple(load_and_split([path], 0.1, seed=s)[1].sentences) for s in range(2, 7)}
    assert any(split != tuple(valid.sentences) for split in others)


def test_split_edge_cases(tmp_path: Path):
    """Test tiny and empty corpora."""
    one = write_lines(tmp_path / "one.txt", ["talo"])
    train, valid = load_and_split([one], 0.5, seed=0)
    assert (len(train), len(valid)) == (1, 0)
    two = write_lines(tmp_path / "two.txt", ["talo", "auto"])
    assert [len(c) for c in load_and_split([two], 0.01, seed=0)] == [1, 1]
    empty = write_lines(tmp_path / "empty.txt", ["...", "—"])
    with pytest.raises(DataException, match="no sentences after preprocessing"):
        load_and_split([empty], 0.1, seed=0)
    with pytest.raises(ValidationException):
        load_and_split([two], 1.0, seed=0)


def test_manifest_roundtrip(tmp_path: Path):
    """Test writing and reading the manifest."""
    path = write_lines(tmp_path / "c.txt", ["talo", "auto", "!!"])
    train, _ = load_and_split([path], 0.5, seed=4)
    out = tmp_path / "manifest.txt"
    write_manifest(train.manifest, out)
    assert read_manifest(out) == train.manifest
    (tmp_path / "bad.txt").write_text("colour=blue\n", encoding="utf-8")
    with pytest.raises(DataException, match=":1:"):
        read_manifest(tmp_path / "bad.txt")


def test_corpus_model_rejects_marker():
    """Test that a sentence carrying the boundary marker is invalid."""
    with pytest.raises(ValueError):
        Corpus(sentences=["talo+n"])


def test_encode_and_decode_sentence(segmenter, vocab_mm, fixture_sentences):
    """Test framing and the inverse mapping."""
    sentence = fixture_sentences[0]
    ids, unknown = encode_sentence(sentence, segmenter, vocab_mm, MarkingScheme.LEFT_RIGHT)
    assert ids[0] == SOS_ID and ids[-1] == EOS_ID
    assert unknown == 0
    assert decode_sentence(ids, vocab_mm, MarkingScheme.LEFT_RIGHT) == sentence
    with pytest.raises(ValidationException, match="scheme"):
        encode_sentence(sentence, segmenter, vocab_mm, MarkingScheme.LEFT)


def test_shuffled_batches_are_deterministic(encoded_fixture):
    """Test that (seed, epoch) fixes the batch stream."""
    first = list(shuffled_batches(encoded_fixture, 8, seed=3, epoch=0))
    second = list(shuffled_batches(encoded_fixture, 8, seed=3, epoch=0))
    assert all(np.array_equal(a, b) for a, b in zip(first, second, strict=True))
    other = list(shuffled_batches(encoded_fixture, 8, seed=3, epoch=1))
    assert any(a.shape != b.shape or not np.array_equal(a, b) for a, b in zip(first, other))


def test_batches_conserve_tokens(encoded_fixture):
    """Test that batching neither drops nor invents tokens."""
    batches = list(shuffled_batches(encoded_fixture, 7, seed=0, epoch=2))
    assert sum(b.shape[0] for b in batches) == len(encoded_fixture)
    assert all(b.shape[0] <= 7 for b in batches)
    seen = Counter(int(i) for b in batches for i in b.reshape(-1) if i >= NUM_SPECIAL)
    expected = Counter(int(i) for s in encoded_fixture.sentences for i in s if i >= NUM_SPECIAL)
    assert seen == expected


def test_over_length_sentences_are_skipped():
    """Test the max_len filter."""
    encoded = EncodedCorpus([np.array([SOS_ID, 5, EOS_ID]), np.array([SOS_ID, 5, 6, 7, EOS_ID])])
    batches = list(shuffled_batches(encoded, 4, seed=0, epoch=0, max_len=3))
    assert len(batches) == 1
    assert batches[0].tolist() == [[SOS_ID, 5, EOS_ID]]


def test_epoch_batches_from_raw_corpus(fixture_sentences, segmenter, vocab_mm):
    """Test the one-call pipeline from sentences to padded batches."""
    corpus = Corpus(sentences=fixture_sentences[:20])
    batches = list(
        epoch_batches(corpus, vocab_mm, segmenter, MarkingScheme.LEFT_RIGHT, 6, seed=1, epoch=0)
    )
    assert [b.shape[0] for b in batches] == [6, 6, 6, 2]
    assert all(np.all(b[:, 0] == SOS_ID) for b in batches)


def test_pad_sequences():
    """Test right padding."""
    batch = pad_sequences([np.array([3, 5, 4]), np.array([3, 4])])
    assert batch.tolist() == [[3, 5, 4], [3, 4, PAD_ID]]


def test_token_stream_and_segments():
    """Test column layout and the one-step target shift."""
    encoded = EncodedCorpus([np.array([SOS_ID, 5, 6, EOS_ID]), np.array([SOS_ID, 7, EOS_ID])])
    stream = token_stream(encoded, seed=0, epoch=0)
    assert stream.size == 7
    assert sorted(stream.tolist()) == sorted([SOS_ID, 5, 6, EOS_ID, SOS_ID, 7, EOS_ID])
    segments = list(stream_segments(np.arange(11), batch_size=2, seg_len=3))
    assert [x.shape for x, _ in segments] == [(2, 3), (2, 2)]
    inputs, targets = segments[0]
    assert inputs.tolist() == [[0, 1, 2], [5, 6, 7]]
    assert targets.tolist() == [[1, 2, 3], [6, 7, 8]]
    with pytest.raises(ValidationException):
        list(stream_segments(np.arange(3), batch_size=4, seg_len=2))
    with pytest.raises(ValidationException, match="empty corpus"):
        token_stream(EncodedCorpus(), seed=0, epoch=0)


def test_records_file_roundtrip(tmp_path: Path, encoded_fixture, vocab_mm):
    """Test that re-encoding a read record file is byte-identical."""
    records = [s.tolist() for s in encoded_fixture.sentences]
    path = tmp_path / "train.rec"
    write_records(records, path, len(vocab_mm))
    loaded = read_records(path)
    assert loaded.vocab_size == len(vocab_mm)
    assert loaded.records == records
    assert encode_records(loaded.records, loaded.vocab_size) == path.read_bytes()


def test_empty_record_file():
    """Test the header-only file."""
    data = encode_records([], 10)
    assert data[:4] == RECORD_MAGIC
    assert len(data) == 20
    assert decode_records(data).records == []


@pytest.mark.parametrize(
    ("corrupt", "code"),
    [
        (lambda d: b"XXXX" + d[4:], "bad magic"),
        (lambda d: d[:4] + (9).to_bytes(4, "little") + d[8:], "version mismatch"),
        (lambda d: d[:20] + (1000).to_bytes(4, "little") + d[24:], "truncated record"),
        (lambda d: d[:-2], "truncated record"),
        (lambda d: d + b"\x00", "trailing data"),
        (lambda d: d[:8] + (3).to_bytes(4, "little") + d[12:], "id out of range"),
        (lambda d: d[:10], "truncated record"),
    ],
)
def test_record_fault_injection(corrupt, code):
    """Test that every corruption yields its named error."""
    data = encode_records([[SOS_ID, 5, 6, EOS_ID], [SOS_ID, 7, EOS_ID]], 10)
    with pytest.raises(RecordFormatException) as info:
        decode_records(corrupt(data))
    assert info.value.code == code


def test_record_encoding_rejects_bad_ids(tmp_path: Path):
    """Test the writer's range check and the reader's missing-file error."""
    with pytest.raises(RecordFormatException, match="id out of range"):
        encode_records([[0, 10]], 10)
    with pytest.raises(RecordFormatException, match="unreadable"):
        read_records(tmp_path / "missing.rec")


def test_word_counts():
    """Test whitespace word counting."""
    assert word_counts(["talo talo", "auto"]) == Counter({"talo": 2, "auto": 1})
