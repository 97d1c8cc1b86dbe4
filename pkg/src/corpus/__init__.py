"""Text ingestion, preprocessing, batching and record files."""

from .batching import (
    EncodedCorpus,
    decode_sentence,
    encode_corpus,
    encode_sentence,
    epoch_batches,
    pad_sequences,
    shuffled_batches,
    stream_segments,
    token_stream,
)
from .preprocess import (
    load_and_split,
    load_corpus,
    preprocess_line,
    read_lines,
    read_manifest,
    word_counts,
    write_manifest,
)
from .records import RecordFile, decode_records, encode_records, read_records, write_records

__all__ = [
    "EncodedCorpus",
    "RecordFile",
    "decode_records",
    "decode_sentence",
    "encode_corpus",
    "encode_records",
    "encode_sentence",
    "epoch_batches",
    "load_and_split",
    "load_corpus",
    "pad_sequences",
    "preprocess_line",
    "read_lines",
    "read_manifest",
    "read_records",
    "shuffled_batches",
    "stream_segments",
    "token_stream",
    "word_counts",
    "write_manifest",
    "write_records",
]
