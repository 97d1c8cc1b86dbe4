"""Corpus and manifest models."""

from pydantic import BaseModel, Field, field_validator

PREPROCESSING_VERSION = "strip-punct-v1"
MARKER = "+"


class SourceFile(BaseModel):
    """One input file and what preprocessing kept from it."""

    path: str
    line_count: int = Field(..., ge=0)
    kept_count: int = Field(..., ge=0)


class CorpusManifest(BaseModel):
    """Where a corpus came from and how it was prepared."""

    sources: list[SourceFile] = Field(default_factory=list)
    preprocessing_version: str = PREPROCESSING_VERSION
    split_seed: int | None = None
    valid_fraction: float | None = None


class Corpus(BaseModel):
    """Preprocessed sentences, one per line of the source text."""

    sentences: list[str]
    manifest: CorpusManifest = Field(default_factory=CorpusManifest)

    @field_validator("sentences")
    @classmethod
    def check_sentences(cls, sentences: list[str]) -> list[str]:
        for index, sentence in enumerate(sentences):
            if not sentence or sentence != sentence.strip():
                raise ValueError(f"sentence {index} is empty or not trimmed")
            if MARKER in sentence:
                raise ValueError(f"sentence {index} contains the reserved marker")
        return sentences

    def __len__(self) -> int:
        return len(self.sentences)
