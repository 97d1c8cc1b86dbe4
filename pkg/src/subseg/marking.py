"""Boundary marking of subwords and its inverse."""

from collections.abc import Sequence

from ..models.base import MarkingScheme
from ..models.corpus import MARKER
from ..utils.exceptions import SegmentationException, ValidationException
from .baseline import SegmentationModel, segment_sentence


def apply_marking(
    words: Sequence[Sequence[str]], scheme: MarkingScheme
) -> list[str]:
    """Flatten word-structured subwords into marked tokens.

    ``LEFT_RIGHT``: non-final pieces get a trailing marker and non-initial
    pieces a leading one. ``LEFT``: only non-initial pieces are marked.
    """
    tokens: list[str] = []
    for word in words:
        if not word:
            raise ValidationException("a word must have at least one subword")
        last = len(word) - 1
        for index, piece in enumerate(word):
            if not piece:
                raise ValidationException("empty subword")
            if piece.startswith(MARKER) or piece.endswith(MARKER):
                raise SegmentationException("marker collision", {"subword": piece})
            token = piece
            if index > 0:
                token = MARKER + token
            if scheme is MarkingScheme.LEFT_RIGHT and index < last:
                token = token + MARKER
            tokens.append(token)
    return tokens


def detokenize(tokens: Sequence[str], scheme: MarkingScheme) -> str:
    """Rebuild the sentence: continuation tokens join their predecessor."""
    words: list[str] = []
    expecting = False
    for position, token in enumerate(tokens):
        lead = token.startswith(MARKER)
        trail = scheme is MarkingScheme.LEFT_RIGHT and token.endswith(MARKER)
        core = token[1 if lead else 0 : len(token) - 1 if trail else len(token)]
        if not core:
            raise SegmentationException(
                "malformed token", {"position": position, "token": token}
            )
        if lead:
            if not words or (scheme is MarkingScheme.LEFT_RIGHT and not expecting):
                raise SegmentationException(
                    "orphan continuation", {"position": position, "token": token}
                )
            words[-1] += core
        else:
            if expecting:
                raise SegmentationException(
                    "dangling continuation", {"position": position - 1}
                )
            words.append(core)
        expecting = trail
    if expecting:
        raise SegmentationException(
            "dangling continuation", {"position": len(tokens) - 1}
        )
    return " ".join(words)


def mark_sentence(
    model: SegmentationModel, sentence: str, scheme: MarkingScheme
) -> list[str]:
    """Segment and mark a preprocessed sentence."""
    return apply_marking(segment_sentence(model, sentence), scheme)
