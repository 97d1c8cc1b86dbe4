"""Evaluation report and metric row models."""

import math

from pydantic import BaseModel, Field, model_validator

from .base import EvalMode


class SentenceScore(BaseModel):
    """Log-probability of one sentence and the number of scored positions."""

    sentence_id: int = Field(..., ge=0)
    log_prob: float
    length: int = Field(..., ge=0)


class EvalReport(BaseModel):
    """Corpus-level (pseudo-)perplexity.

    ``perplexity`` is always ``exp(-total_log_prob / token_count)``; AR and
    pseudo reports count positions differently and are not comparable.
    """

    mode: EvalMode
    total_log_prob: float
    token_count: int = Field(..., gt=0)
    perplexity: float
    unk_count: int = Field(default=0, ge=0)
    per_sentence: list[SentenceScore] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_consistency(self) -> "EvalReport":
        if sum(s.length for s in self.per_sentence) != self.token_count:
            raise ValueError("token_count must equal the sum of sentence lengths")
        total = math.fsum(s.log_prob for s in self.per_sentence)
        if abs(total - self.total_log_prob) > 1e-9 * max(1.0, abs(total)):
            raise ValueError("sentence log-probabilities do not sum to the total")
        return self

    @classmethod
    def from_scores(
        cls, mode: EvalMode, scores: list[SentenceScore], unk_count: int = 0
    ) -> "EvalReport":
        """Build a report, summing in sentence-id order."""
        scores = sorted(scores, key=lambda s: s.sentence_id)
        total = math.fsum(s.log_prob for s in scores)
        count = sum(s.length for s in scores)
        if count == 0:
            raise ValueError("no scored positions")
        return cls(
            mode=mode,
            total_log_prob=total,
            token_count=count,
            perplexity=math.exp(-total / count),
            unk_count=unk_count,
            per_sentence=scores,
        )

    def summary_line(self) -> str:
        return (
            f"mode={self.mode.value} T={self.token_count} "
            f"logprob={self.total_log_prob!r} ppl={self.perplexity!r} "
            f"unk={self.unk_count}"
        )


class MetricRecord(BaseModel):
    """One row of the training metric log."""

    step: int = Field(..., ge=0)
    lr: float
    loss: float
    metric: float  # masked-LM accuracy or perplexity
    split: str = Field(..., pattern=r"^(train|valid)$")

    def to_tsv(self) -> str:
        return f"{self.step}\t{self.lr!r}\t{self.loss!r}\t{self.metric!r}\t{self.split}"
