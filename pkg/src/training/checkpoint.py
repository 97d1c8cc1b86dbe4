"""Checkpoint files.

Layout, little-endian::

    b"SPCK" | u32 version | u32 n | n bytes of JSON metadata (sorted keys)
    u32 count | count x ( u32 name_len | name | u32 ndim | ndim x u64 dim | f64 data )

Tensor names are prefixed ``param/``, ``adam_m/``, ``adam_v/`` or ``memory/``.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import structlog

from ..core.config_file import echo_config, parse_config_text
from ..models.configs import RunConfig
from ..numcore import OptimizerState
from ..utils.exceptions import CheckpointException, ConfigurationException
from ..utils.helpers import ensure_parent

logger = structlog.get_logger(__name__)

CHECKPOINT_MAGIC = b"SPCK"
CHECKPOINT_VERSION = 1
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

# Fields that only say where outputs go; they may change between a run and its resume.
OUTPUT_FIELDS = ("checkpoint_dir", "metric_log", "checkpoint_every", "valid_every")


@dataclass
class TrainingState:
    """Everything needed to continue a run exactly where it stopped."""

    config: RunConfig
    vocab_size: int
    params: dict[str, np.ndarray]
    optimizer: OptimizerState
    rng_state: dict[str, Any]
    step: int = 0
    epoch: int = 0
    cursor: int = 0
    memory: list[np.ndarray] = field(default_factory=list)


def _metadata(state: TrainingState) -> bytes:
    opt = state.optimizer
    meta = {
        "config": echo_config(state.config),
        "vocab_size": state.vocab_size,
        "step": state.step,
        "epoch": state.epoch,
        "cursor": state.cursor,
        "rng": state.rng_state,
        "adam": {"beta1": opt.beta1, "beta2": opt.beta2, "eps": opt.eps, "lr": opt.lr, "t": opt.t},
    }
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _tensor_table(state: TrainingState) -> list[tuple[str, np.ndarray]]:
    table = [(f"param/{name}", values) for name, values in state.params.items()]
    table += [(f"adam_m/{name}", values) for name, values in state.optimizer.m.items()]
    table += [(f"adam_v/{name}", values) for name, values in state.optimizer.v.items()]
    table += [(f"memory/{index}", values) for index, values in enumerate(state.memory)]
    return table


def encode_checkpoint(state: TrainingState) -> bytes:
    meta = _metadata(state)
    table = _tensor_table(state)
    parts = [CHECKPOINT_MAGIC, _U32.pack(CHECKPOINT_VERSION), _U32.pack(len(meta)), meta]
    parts.append(_U32.pack(len(table)))
    for name, values in table:
        encoded = name.encode("utf-8")
        parts += [_U32.pack(len(encoded)), encoded, _U32.pack(values.ndim)]
        parts += [_U64.pack(dim) for dim in values.shape]
        parts.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise CheckpointException("truncated", f"needed {size} bytes at offset {self.offset}")
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(_U64.size))[0]


def decode_checkpoint(data: bytes) -> TrainingState:
    reader = _Reader(data)
    magic = reader.take(len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointException("bad magic", f"expected {CHECKPOINT_MAGIC!r}, got {magic!r}")
    version = reader.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointException(
            "version mismatch", f"expected version {CHECKPOINT_VERSION}, got {version}"
        )
    try:
        meta = json.loads(reader.take(reader.u32()).decode("utf-8"))
        config = parse_config_text(meta["config"], "<checkpoint>")
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ConfigurationException) as exc:
        raise CheckpointException("bad metadata", str(exc)) from exc

    tensors: dict[str, dict[str, np.ndarray]] = {"param": {}, "adam_m": {}, "adam_v": {}, "memory": {}}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        shape = tuple(reader.u64() for _ in range(reader.u32()))
        count = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(reader.take(8 * count), dtype="<f8").astype(np.float64)
        group, _, key = name.partition("/")
        if group not in tensors:
            raise CheckpointException("bad metadata", f"unknown tensor group in {name!r}")
        tensors[group][key] = values.reshape(shape)
    if reader.offset != len(data):
        raise CheckpointException("trailing data", f"{len(data) - reader.offset} unread bytes")

    adam = meta["adam"]
    optimizer = OptimizerState(
        beta1=adam["beta1"],
        beta2=adam["beta2"],
        eps=adam["eps"],
        lr=adam["lr"],
        t=adam["t"],
        m=tensors["adam_m"],
        v=tensors["adam_v"],
    )
    memory = [tensors["memory"][key] for key in sorted(tensors["memory"], key=int)]
    return TrainingState(
        config=config,
        vocab_size=meta["vocab_size"],
        params=tensors["param"],
        optimizer=optimizer,
        rng_state=meta["rng"],
        step=meta["step"],
        epoch=meta["epoch"],
        cursor=meta["cursor"],
        memory=memory,
    )


def save_checkpoint(state: TrainingState, path: str | Path) -> Path:
    path = ensure_parent(path)
    path.write_bytes(encode_checkpoint(state))
    logger.info("Checkpoint saved", path=str(path), step=state.step)
    return path


def load_checkpoint(path: str | Path) -> TrainingState:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CheckpointException("unreadable", f"{path}: {exc}") from exc
    state = decode_checkpoint(data)
    logger.info("Checkpoint loaded", path=str(path), step=state.step, kind=state.config.kind.value)
    return state


def check_resume(state: TrainingState, run: RunConfig) -> None:
    """Refuse to continue ``state`` under a run that would compute differently."""
    saved = state.config.model_dump(exclude=set(OUTPUT_FIELDS))
    wanted = run.model_dump(exclude=set(OUTPUT_FIELDS))
    differing = sorted(key for key in saved if saved[key] != wanted[key])
    if differing:
        raise CheckpointException(
            "config mismatch", f"checkpoint differs from the run in {', '.join(differing)}"
        )
