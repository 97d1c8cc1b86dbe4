"""Model, masking and run configuration models."""

from typing import Any

from pydantic import BaseModel, Field, field_validator, model_validator

from .base import MarkingScheme, ModelKind


class EncoderConfig(BaseModel):
    """Bidirectional encoder sizes. Field defaults are the desk-scale instance."""

    vocab_size: int = Field(..., gt=0)
    num_layers: int = Field(default=4, gt=0)
    hidden_size: int = Field(default=128, gt=0)
    num_heads: int = Field(default=4, gt=0)
    intermediate_size: int = Field(default=512, gt=0)
    dropout_prob: float = Field(default=0.1, ge=0.0, lt=1.0)
    max_position: int = Field(default=128, gt=0)
    layer_norm_eps: float = Field(default=1e-12, gt=0.0)

    @model_validator(mode="after")
    def check_heads(self) -> "EncoderConfig":
        if self.hidden_size % self.num_heads:
            raise ValueError("hidden_size must be divisible by num_heads")
        return self

    @property
    def head_size(self) -> int:
        return self.hidden_size // self.num_heads

    @classmethod
    def full_scale(cls, vocab_size: int) -> "EncoderConfig":
        """The published 20-layer configuration."""
        return cls(
            vocab_size=vocab_size,
            num_layers=20,
            hidden_size=896,
            num_heads=16,
            intermediate_size=3584,
            dropout_prob=0.1,
            max_position=300,
        )


class XLConfig(BaseModel):
    """Transformer-XL sizes. Attention width is num_heads * head_size."""

    vocab_size: int = Field(..., gt=0)
    num_layers: int = Field(default=2, gt=0)
    hidden_size: int = Field(default=64, gt=0)
    num_heads: int = Field(default=2, gt=0)
    head_size: int = Field(default=32, gt=0)
    intermediate_size: int = Field(default=256, gt=0)
    seg_len: int = Field(default=16, ge=1)
    mem_len: int = Field(default=16, ge=0)
    dropout_prob: float = Field(default=0.1, ge=0.0, lt=1.0)
    layer_norm_eps: float = Field(default=1e-5, gt=0.0)

    @field_validator("hidden_size")
    @classmethod
    def check_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("hidden_size must be even for sinusoidal positions")
        return value

    @property
    def attention_size(self) -> int:
        return self.num_heads * self.head_size

    @classmethod
    def long_context(cls, vocab_size: int) -> "XLConfig":
        """Longer context: 150-token segments and memory."""
        return cls(
            vocab_size=vocab_size,
            num_layers=4,
            hidden_size=512,
            num_heads=8,
            head_size=80,
            intermediate_size=2048,
            seg_len=150,
            mem_len=150,
        )

    @classmethod
    def large(cls, vocab_size: int) -> "XLConfig":
        """Larger model: 32-token segments and memory."""
        return cls(
            vocab_size=vocab_size,
            num_layers=4,
            hidden_size=1024,
            num_heads=8,
            head_size=128,
            intermediate_size=4096,
            seg_len=32,
            mem_len=32,
        )


class MaskPolicy(BaseModel):
    """Masked-LM corruption: selection rate and the MASK/random/keep split."""

    mask_prob: float = Field(default=0.15, ge=0.0, le=1.0)
    mask_fraction: float = Field(default=0.8, ge=0.0, le=1.0)
    random_fraction: float = Field(default=0.1, ge=0.0, le=1.0)
    keep_fraction: float = Field(default=0.1, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_proportions(self) -> "MaskPolicy":
        total = self.mask_fraction + self.random_fraction + self.keep_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError("mask/random/keep proportions must sum to 1")
        return self


_MLM_DEFAULTS: dict[str, Any] = {
    "num_layers": 4,
    "hidden_size": 128,
    "num_heads": 4,
    "intermediate_size": 512,
    "dropout_prob": 0.1,
    "max_position": 128,
}
_XL_DEFAULTS: dict[str, Any] = {
    "num_layers": 2,
    "hidden_size": 64,
    "num_heads": 2,
    "head_size": 32,
    "intermediate_size": 256,
    "dropout_prob": 0.1,
    "seg_len": 16,
    "mem_len": 16,
    "reset_memory_per_sentence": False,
}
_MLM_ONLY = ("max_position", "mask_prob", "mask_fraction", "random_fraction", "keep_fraction")
_XL_ONLY = ("head_size", "seg_len", "mem_len", "reset_memory_per_sentence")

POSITIVE_FIELDS = (
    "batch_size",
    "valid_every",
    "num_layers",
    "hidden_size",
    "num_heads",
    "head_size",
    "intermediate_size",
    "max_position",
    "seg_len",
)


class RunConfig(BaseModel):
    """Everything a training run depends on, as one flat record.

    Model-size fields left unset are filled with the desk-scale defaults of
    ``kind``; fields that do not apply to ``kind`` stay ``None``.
    """

    model_config = {"extra": "forbid"}

    kind: ModelKind
    scheme: MarkingScheme = MarkingScheme.LEFT_RIGHT
    data_path: str
    lexicon_path: str
    vocab_path: str
    valid_path: str | None = None
    valid_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    checkpoint_dir: str = "checkpoints"
    metric_log: str | None = None

    seed: int = 0
    batch_size: int = 16
    peak_lr: float = Field(default=1e-3, ge=0.0)
    warmup_steps: int = Field(default=100, ge=0)
    total_steps: int = Field(default=2000, ge=0)
    min_lr: float = Field(default=0.0, ge=0.0)
    grad_clip: float = Field(default=1.0, ge=0.0)
    valid_every: int = 200
    checkpoint_every: int = Field(default=0, ge=0)
    max_len: int | None = None

    num_layers: int | None = None
    hidden_size: int | None = None
    num_heads: int | None = None
    intermediate_size: int | None = None
    dropout_prob: float | None = Field(default=None, ge=0.0, lt=1.0)
    max_position: int | None = None
    head_size: int | None = None
    seg_len: int | None = None
    mem_len: int | None = Field(default=None, ge=0)
    reset_memory_per_sentence: bool | None = None

    mask_prob: float | None = Field(default=None, ge=0.0, le=1.0)
    mask_fraction: float | None = None
    random_fraction: float | None = None
    keep_fraction: float | None = None

    @field_validator(*POSITIVE_FIELDS)
    @classmethod
    def check_positive(cls, value: int | None, info: Any) -> int | None:
        if value is not None and value <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return value

    @model_validator(mode="after")
    def fill_defaults(self) -> "RunConfig":
        if self.kind is ModelKind.MLM:
            defaults, unused = _MLM_DEFAULTS | MaskPolicy().model_dump(), _XL_ONLY
        else:
            defaults, unused = _XL_DEFAULTS, _MLM_ONLY
        for name in unused:
            if getattr(self, name) is not None:
                raise ValueError(f"{name} does not apply to kind={self.kind.value}")
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if self.kind is ModelKind.MLM:
            split = (self.mask_fraction or 0.0) + (self.random_fraction or 0.0)
            if abs(split + (self.keep_fraction or 0.0) - 1.0) > 1e-9:
                raise ValueError("mask/random/keep proportions must sum to 1")
        if self.max_len is None:
            max_len = self.max_position if self.kind is ModelKind.MLM else 512
            object.__setattr__(self, "max_len", max_len)
        if self.total_steps > 0 and not 1 <= self.warmup_steps <= self.total_steps:
            raise ValueError("warmup_steps must be in [1, total_steps]")
        if self.min_lr > self.peak_lr:
            raise ValueError("min_lr must not exceed peak_lr")
        return self

    def encoder_config(self, vocab_size: int) -> EncoderConfig:
        return EncoderConfig(
            vocab_size=vocab_size,
            num_layers=self.num_layers,
            hidden_size=self.hidden_size,
            num_heads=self.num_heads,
            intermediate_size=self.intermediate_size,
            dropout_prob=self.dropout_prob,
            max_position=self.max_position,
        )

    def xl_config(self, vocab_size: int) -> XLConfig:
        return XLConfig(
            vocab_size=vocab_size,
            num_layers=self.num_layers,
            hidden_size=self.hidden_size,
            num_heads=self.num_heads,
            head_size=self.head_size,
            intermediate_size=self.intermediate_size,
            seg_len=self.seg_len,
            mem_len=self.mem_len,
            dropout_prob=self.dropout_prob,
        )

    def mask_policy(self) -> MaskPolicy:
        return MaskPolicy(
            mask_prob=self.mask_prob,
            mask_fraction=self.mask_fraction,
            random_fraction=self.random_fraction,
            keep_fraction=self.keep_fraction,
        )

    def resolved_metric_log(self) -> str:
        return self.metric_log or f"{self.checkpoint_dir}/metrics.tsv"
