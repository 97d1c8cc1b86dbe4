"""Base data models and common types."""

from enum import Enum


class MarkingScheme(str, Enum):
    """How subword boundaries are written into tokens."""

    LEFT_RIGHT = "mm"  # slipp+ +er+ +s
    LEFT = "m"  # slipp +er +s

    @property
    def label(self) -> str:
        return "+m+" if self is MarkingScheme.LEFT_RIGHT else "+m"


class ModelKind(str, Enum):
    """Language model families."""

    MLM = "mlm"
    XL = "xl"


class Mode(str, Enum):
    """Forward-pass mode; dropout is active only in training."""

    TRAIN = "train"
    EVAL = "eval"


class EvalMode(str, Enum):
    """Which probability a report is built from."""

    AUTOREGRESSIVE = "ar"
    PSEUDO = "pseudo"
