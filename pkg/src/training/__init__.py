"""Training loops, checkpoints and the metric log."""

from .checkpoint import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    TrainingState,
    check_resume,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .metric_log import METRIC_HEADER, MetricLog, read_metric_log
from .trainer import (
    PreparedData,
    TrainResult,
    build_model,
    model_from_checkpoint,
    prepare_data,
    train_mlm,
    train_xl,
    unigram_perplexity,
)

__all__ = [
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "METRIC_HEADER",
    "MetricLog",
    "PreparedData",
    "TrainResult",
    "TrainingState",
    "build_model",
    "check_resume",
    "decode_checkpoint",
    "encode_checkpoint",
    "load_checkpoint",
    "model_from_checkpoint",
    "prepare_data",
    "read_metric_log",
    "save_checkpoint",
    "train_mlm",
    "train_xl",
    "unigram_perplexity",
]
