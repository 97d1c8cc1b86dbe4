"""Binary record files of encoded sentences.

Layout, all integers little-endian::

    b"SPPL" | u32 version | u32 vocab_size | u64 count
    count x ( u32 length | length x u32 id )
"""

import struct
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import structlog

from ..utils.exceptions import RecordFormatException
from ..utils.helpers import ensure_parent

logger = structlog.get_logger(__name__)

RECORD_MAGIC = b"SPPL"
RECORD_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_LENGTH = struct.Struct("<I")


@dataclass
class RecordFile:
    vocab_size: int
    records: list[list[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


def encode_records(records: Sequence[Sequence[int]], vocab_size: int) -> bytes:
    parts = [_HEADER.pack(RECORD_MAGIC, RECORD_VERSION, vocab_size, len(records))]
    for index, record in enumerate(records):
        ids = np.asarray(record, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
            raise RecordFormatException(
                "id out of range", f"record {index} has an id outside [0, {vocab_size})"
            )
        parts.append(_LENGTH.pack(ids.size))
        parts.append(ids.astype("<u4").tobytes())
    return b"".join(parts)


def decode_records(data: bytes) -> RecordFile:
    if len(data) < _HEADER.size:
        raise RecordFormatException("truncated record", "file shorter than its header")
    magic, version, vocab_size, count = _HEADER.unpack_from(data)
    if magic != RECORD_MAGIC:
        raise RecordFormatException("bad magic", f"expected {RECORD_MAGIC!r}, got {magic!r}")
    if version != RECORD_VERSION:
        raise RecordFormatException(
            "version mismatch", f"expected version {RECORD_VERSION}, got {version}"
        )

    offset = _HEADER.size
    records: list[list[int]] = []
    for index in range(count):
        if offset + _LENGTH.size > len(data):
            raise RecordFormatException("truncated record", f"record {index} has no length")
        (length,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        end = offset + 4 * length
        if end > len(data):
            raise RecordFormatException(
                "truncated record", f"record {index} needs {length} ids past end of file"
            )
        ids = np.frombuffer(data, dtype="<u4", count=length, offset=offset)
        if length and int(ids.max()) >= vocab_size:
            raise RecordFormatException(
                "id out of range", f"record {index} has an id >= {vocab_size}"
            )
        records.append(ids.astype(np.int64).tolist())
        offset = end
    if offset != len(data):
        raise RecordFormatException("trailing data", f"{len(data) - offset} bytes after last record")
    return RecordFile(vocab_size=vocab_size, records=records)


def write_records(records: Iterable[Sequence[int]], path: str | Path, vocab_size: int) -> None:
    records = list(records)
    ensure_parent(path).write_bytes(encode_records(records, vocab_size))
    logger.info("Records written", path=str(path), records=len(records), vocab_size=vocab_size)


def read_records(path: str | Path) -> RecordFile:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise RecordFormatException("unreadable", f"{path}: {exc}") from exc
    try:
        return decode_records(data)
    except RecordFormatException as exc:
        raise RecordFormatException(exc.code, f"{path}: {exc.message.split(': ', 1)[1]}") from exc
