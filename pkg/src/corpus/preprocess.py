"""Reading raw text into preprocessed corpora, splitting and manifests."""

import unicodedata
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path

import structlog

from ..models.corpus import PREPROCESSING_VERSION, Corpus, CorpusManifest, SourceFile
from ..utils.exceptions import DataException, ValidationException
from ..utils.helpers import ensure_parent, make_rng

logger = structlog.get_logger(__name__)

# Unicode general-category prefixes removed from text: punctuation and symbols.
STRIPPED_CATEGORIES = ("P", "S")


def preprocess_line(raw: str) -> str | None:
    """Drop punctuation and symbols, collapse whitespace; ``None`` if nothing is left.

    Case and digits are kept as they are.
    """
    kept = "".join(
        ch for ch in raw if not unicodedata.category(ch).startswith(STRIPPED_CATEGORIES)
    )
    cleaned = " ".join(kept.split())
    return cleaned or None


def read_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    """``(line_number, text)`` for every line; invalid UTF-8 names its line."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataException(f"{path}: cannot read: {exc}") from exc
    for number, chunk in enumerate(raw.splitlines(), start=1):
        try:
            yield number, chunk.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataException(
                f"{path}:{number}: invalid UTF-8", {"path": str(path), "line": number}
            ) from exc


def load_corpus(paths: Sequence[str | Path]) -> Corpus:
    """Preprocess every line of every file, in order."""
    sentences: list[str] = []
    sources: list[SourceFile] = []
    for path in paths:
        line_count = kept = 0
        for _, text in read_lines(path):
            line_count += 1
            cleaned = preprocess_line(text)
            if cleaned is not None:
                sentences.append(cleaned)
                kept += 1
        sources.append(SourceFile(path=str(path), line_count=line_count, kept_count=kept))
        logger.info("Corpus file read", path=str(path), lines=line_count, kept=kept)
    return Corpus(sentences=sentences, manifest=CorpusManifest(sources=sources))


def load_and_split(
    paths: Sequence[str | Path], valid_fraction: float, seed: int
) -> tuple[Corpus, Corpus]:
    """Sentence-level random split; each side keeps source order."""
    if not 0.0 < valid_fraction < 1.0:
        raise ValidationException(f"valid_fraction must be in (0, 1), got {valid_fraction}")
    corpus = load_corpus(paths)
    total = len(corpus)
    if total == 0:
        raise DataException("no sentences after preprocessing")

    valid_count = min(total - 1, max(1, round(total * valid_fraction))) if total > 1 else 0
    order = make_rng(seed).permutation(total)
    valid_index = set(order[:valid_count].tolist())
    manifest = corpus.manifest.model_copy(
        update={"split_seed": seed, "valid_fraction": valid_fraction}
    )
    train = [s for i, s in enumerate(corpus.sentences) if i not in valid_index]
    valid = [s for i, s in enumerate(corpus.sentences) if i in valid_index]
    logger.info("Corpus split", train=len(train), valid=len(valid), seed=seed)
    return Corpus(sentences=train, manifest=manifest), Corpus(sentences=valid, manifest=manifest)


def word_counts(sentences: Iterable[str]) -> Counter[str]:
    counts: Counter[str] = Counter()
    for sentence in sentences:
        counts.update(sentence.split())
    return counts


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    lines = [f"preprocessing_version={manifest.preprocessing_version}"]
    if manifest.split_seed is not None:
        lines.append(f"split_seed={manifest.split_seed}")
    if manifest.valid_fraction is not None:
        lines.append(f"valid_fraction={manifest.valid_fraction!r}")
    lines += [f"source\t{s.path}\t{s.line_count}\t{s.kept_count}" for s in manifest.sources]
    ensure_parent(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    fields: dict[str, object] = {"preprocessing_version": PREPROCESSING_VERSION}
    sources: list[SourceFile] = []
    for number, line in read_lines(path):
        if not line:
            continue
        if line.startswith("source\t"):
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataException(f"{path}:{number}: expected source<TAB>path<TAB>lines<TAB>kept")
            try:
                sources.append(
                    SourceFile(path=parts[1], line_count=int(parts[2]), kept_count=int(parts[3]))
                )
            except ValueError as exc:
                raise DataException(f"{path}:{number}: bad source counts") from exc
            continue
        key, sep, value = line.partition("=")
        if not sep or key not in ("preprocessing_version", "split_seed", "valid_fraction"):
            raise DataException(f"{path}:{number}: unknown manifest entry {line!r}")
        fields[key] = value
    try:
        return CorpusManifest(sources=sources, **fields)
    except ValueError as exc:
        raise DataException(f"{path}: invalid manifest: {exc}") from exc
