"""Morfessor-Baseline style unsupervised segmentation.

Total cost in bits is ``C_lexicon + alpha * C_corpus``:

* ``C_corpus = -sum over tokens of log2 p(unit)`` with maximum-likelihood
  unigram probabilities, i.e. ``N log2 N - sum_c c log2 c``.
* ``C_lexicon = sum over types of (len + 1) * log2(|alphabet| + 1)`` plus a
  universal (log-star) code for every type's count.

Training starts from whole words and greedily re-splits one word at a time.
"""

import math
from collections import Counter
from collections.abc import Iterable, Mapping
from pathlib import Path

import numpy as np
import structlog

from ..models.corpus import MARKER
from ..utils.exceptions import DataException, SegmentationException, ValidationException
from ..utils.helpers import ensure_parent

logger = structlog.get_logger(__name__)

LEXICON_HEADER = "#morfessor-baseline"
_LOG2_C0 = math.log2(2.865064)


def log_star(n: int) -> float:
    """Rissanen's universal code length for a positive integer, in bits."""
    bits = _LOG2_C0
    x = math.log2(n) if n > 1 else 0.0
    while x > 0:
        bits += x
        x = math.log2(x)
    return bits


def _xlog2x(c: int) -> float:
    return c * math.log2(c) if c > 0 else 0.0


class SegmentationModel:
    """Subword lexicon with counts, corpus weight and alphabet."""

    def __init__(self, alpha: float, alphabet: Iterable[str]):
        if not alpha > 0:
            raise SegmentationException("invalid corpus weight", {"alpha": alpha})
        self.alpha = float(alpha)
        self.alphabet = frozenset(alphabet)
        self.lexicon: Counter[str] = Counter()
        self.analyses: dict[str, tuple[str, ...]] = {}
        self.word_counts: dict[str, int] = {}
        self.cost_history: list[float] = []
        self._char_bits = math.log2(len(self.alphabet) + 1)
        self._tokens = 0
        self._sum_xlogx = 0.0
        self._type_chars = 0
        self._sum_logstar = 0.0

    # -- cost bookkeeping -------------------------------------------------

    @property
    def tokens(self) -> int:
        return self._tokens

    @property
    def types(self) -> int:
        return len(self.lexicon)

    def _modify(self, unit: str, delta: int) -> None:
        old = self.lexicon.get(unit, 0)
        new = old + delta
        if new < 0:
            raise ValidationException(f"negative count for unit {unit!r}")
        self._tokens += delta
        self._sum_xlogx += _xlog2x(new) - _xlog2x(old)
        if old > 0:
            self._sum_logstar -= log_star(old)
        if new > 0:
            self._sum_logstar += log_star(new)
            self.lexicon[unit] = new
        else:
            self.lexicon.pop(unit, None)
        if old == 0 and new > 0:
            self._type_chars += len(unit) + 1
        elif old > 0 and new == 0:
            self._type_chars -= len(unit) + 1

    def corpus_cost(self) -> float:
        if self._tokens == 0:
            return 0.0
        return _xlog2x(self._tokens) - self._sum_xlogx

    def lexicon_cost(self) -> float:
        return self._type_chars * self._char_bits + self._sum_logstar

    def cost(self) -> float:
        return self.lexicon_cost() + self.alpha * self.corpus_cost()

    # -- training ---------------------------------------------------------

    def _add_word(self, word: str, count: int) -> None:
        self.word_counts[word] = count
        self.analyses[word] = (word,)
        self._modify(word, count)

    def _recursive_split(self, construction: str, count: int) -> list[str]:
        self._modify(construction, count)
        if len(construction) == 1:
            return [construction]
        best_cost = self.cost()
        best_split = 0
        self._modify(construction, -count)
        for split in range(1, len(construction)):
            prefix, suffix = construction[:split], construction[split:]
            self._modify(prefix, count)
            self._modify(suffix, count)
            candidate = self.cost()
            self._modify(prefix, -count)
            self._modify(suffix, -count)
            if candidate < best_cost:
                best_cost, best_split = candidate, split
        if best_split == 0:
            self._modify(construction, count)
            return [construction]
        return self._recursive_split(
            construction[:best_split], count
        ) + self._recursive_split(construction[best_split:], count)

    def _optimize_word(self, word: str) -> None:
        count = self.word_counts[word]
        previous = self.analyses[word]
        before = self.cost()
        for unit in previous:
            self._modify(unit, -count)
        parts = self._recursive_split(word, count)
        if self.cost() > before:
            for unit in parts:
                self._modify(unit, -count)
            for unit in previous:
                self._modify(unit, count)
            return
        self.analyses[word] = tuple(parts)

    # -- decoding ---------------------------------------------------------

    def unit_log_prob(self, unit: str, allow_unknown: bool = True) -> float | None:
        """Natural-log unigram probability of ``unit``.

        Unseen single characters get ``(1/N) * (1/|alphabet|)``; unseen longer
        units are impossible (``None``). Characters outside the alphabet are
        only allowed with ``allow_unknown``.

        The ``(1/N) * (1/|alphabet|)**length`` smoothing is only ever applied
        at length 1. At any longer length it would never score below the
        split into single characters, which costs
        ``(1/N)**length * (1/|alphabet|)**length``, so every unseen word
        would come back whole instead of falling back to characters around
        its known units.
        """
        count = self.lexicon.get(unit, 0)
        tokens = max(self._tokens, 1)
        if count > 0:
            return math.log(count / tokens)
        if len(unit) != 1:
            return None
        if unit not in self.alphabet and not allow_unknown:
            return None
        return -math.log(tokens) - math.log(max(len(self.alphabet), 1))

    def segmentation_log_prob(self, pieces: Iterable[str]) -> float:
        total = 0.0
        for piece in pieces:
            score = self.unit_log_prob(piece)
            if score is None:
                return -math.inf
            total += score
        return total

    def get_info(self) -> dict[str, object]:
        return {
            "alpha": self.alpha,
            "types": self.types,
            "tokens": self.tokens,
            "alphabet": len(self.alphabet),
            "cost": self.cost(),
        }


def train_segmentation(
    word_counts: Mapping[str, int],
    alpha: float,
    epsilon: float = 0.1,
    seed: int = 0,
    max_epochs: int = 100,
) -> SegmentationModel:
    """Greedy recursive-split training until a pass gains less than ``epsilon`` bits."""
    if not word_counts:
        raise SegmentationException("empty input")
    if not alpha > 0:
        raise SegmentationException("invalid corpus weight", {"alpha": alpha})
    if not epsilon > 0:
        raise ValidationException("epsilon must be positive", {"epsilon": epsilon})
    for word, count in word_counts.items():
        if not word or count < 1:
            raise ValidationException(f"invalid word entry {word!r}: {count}")
        if MARKER in word:
            raise SegmentationException("marker collision", {"word": word})

    words = sorted(word_counts)
    model = SegmentationModel(alpha, {ch for word in words for ch in word})
    for word in words:
        model._add_word(word, int(word_counts[word]))
    model.cost_history.append(model.cost())
    log = logger.bind(alpha=alpha, words=len(words))
    log.info("Segmentation training started", cost=model.cost_history[0])

    rng = np.random.default_rng(seed)
    for epoch in range(1, max_epochs + 1):
        for index in rng.permutation(len(words)):
            model._optimize_word(words[index])
        cost = model.cost()
        gain = model.cost_history[-1] - cost
        model.cost_history.append(cost)
        log.info("Segmentation epoch", epoch=epoch, cost=cost, types=model.types)
        if gain < epsilon:
            break
    return model


def segment_word(
    model: SegmentationModel, word: str, allow_unknown: bool = True
) -> list[str]:
    """Most probable split of ``word`` into units (Viterbi over split points)."""
    if not word:
        raise ValidationException("cannot segment an empty word")
    length = len(word)
    best = [-math.inf] * (length + 1)
    back = [0] * (length + 1)
    best[0] = 0.0
    for end in range(1, length + 1):
        for start in range(end):
            if best[start] == -math.inf:
                continue
            score = model.unit_log_prob(word[start:end], allow_unknown)
            if score is None:
                continue
            if best[start] + score > best[end]:
                best[end] = best[start] + score
                back[end] = start
    if best[length] == -math.inf:
        raise SegmentationException("unsegmentable", {"word": word})
    pieces = []
    end = length
    while end > 0:
        pieces.append(word[back[end] : end])
        end = back[end]
    return pieces[::-1]


def segment_sentence(model: SegmentationModel, sentence: str) -> list[list[str]]:
    """Segment every space-separated word of a preprocessed sentence."""
    return [segment_word(model, word) for word in sentence.split(" ") if word]


def save_lexicon(model: SegmentationModel, path: str | Path) -> None:
    path = ensure_parent(path)
    entries = sorted(model.lexicon.items(), key=lambda item: (-item[1], item[0]))
    with path.open("w", encoding="utf-8") as handle:
        handle.write(f"{LEXICON_HEADER} alpha={model.alpha!r}\n")
        for unit, count in entries:
            handle.write(f"{count}\t{unit}\n")
    logger.info("Lexicon saved", path=str(path), types=len(entries))


def load_lexicon(path: str | Path) -> SegmentationModel:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataException(f"{path}: cannot read lexicon: {exc}") from exc
    if not lines or not lines[0].startswith(f"{LEXICON_HEADER} alpha="):
        raise DataException(f"{path}:1: missing '{LEXICON_HEADER} alpha=' header")
    try:
        alpha = float(lines[0].split("alpha=", 1)[1])
    except ValueError as exc:
        raise DataException(f"{path}:1: bad alpha value") from exc
    if not 0 < alpha < math.inf:
        raise DataException(f"{path}:1: alpha must be positive", {"alpha": alpha})

    entries: list[tuple[str, int]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        count_text, sep, unit = line.partition("\t")
        if not sep or not unit or not count_text.isdigit() or int(count_text) < 1:
            raise DataException(f"{path}:{lineno}: expected 'count<TAB>subword'")
        entries.append((unit, int(count_text)))

    model = SegmentationModel(alpha, {ch for unit, _ in entries for ch in unit})
    for unit, count in entries:
        if unit in model.lexicon:
            raise DataException(f"{path}: duplicate subword {unit!r}")
        model._modify(unit, count)
    return model
