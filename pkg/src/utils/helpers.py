"""Common utility functions."""

from collections.abc import Sequence
from pathlib import Path
from typing import TypeVar

import numpy as np

T = TypeVar("T")


def chunk_list(items: Sequence[T], chunk_size: int) -> list[list[T]]:
    """Split list into chunks of specified size."""
    return [list(items[i : i + chunk_size]) for i in range(0, len(items), chunk_size)]


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Seeded generator; extra integers select an independent stream.

    ``make_rng(seed, epoch)`` is how per-epoch shuffles are keyed.
    """
    return np.random.default_rng([seed, *stream])


def rng_state(rng: np.random.Generator) -> dict[str, object]:
    """Serializable bit-generator state."""
    return dict(rng.bit_generator.state)


def restore_rng(state: dict[str, object]) -> np.random.Generator:
    """Rebuild a generator from ``rng_state`` output."""
    bit_generator = getattr(np.random, str(state["bit_generator"]))()
    bit_generator.state = state
    return np.random.Generator(bit_generator)


def ensure_parent(path: str | Path) -> Path:
    """Create the parent directory of ``path`` if needed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
