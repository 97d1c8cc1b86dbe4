"""Custom exception classes."""

from typing import Any


class SubwordLMException(Exception):
    """Base exception for the toolkit."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ValidationException(SubwordLMException):
    """Exception raised for invalid arguments or violated preconditions."""

    pass


class ConfigurationException(SubwordLMException):
    """Exception raised for run-config errors."""

    pass


class SegmentationException(SubwordLMException):
    """Exception raised by segmentation, marking and detokenization."""

    pass


class DataException(SubwordLMException):
    """Exception raised while reading or preprocessing corpus data."""

    pass


class RecordFormatException(DataException):
    """Exception raised for malformed record files."""

    def __init__(
        self, code: str, message: str, details: dict[str, Any] | None = None
    ):
        self.code = code
        super().__init__(f"{code}: {message}", details)


class CheckpointException(DataException):
    """Exception raised for unreadable or incompatible checkpoints."""

    def __init__(
        self, code: str, message: str, details: dict[str, Any] | None = None
    ):
        self.code = code
        super().__init__(f"{code}: {message}", details)


class ShapeException(ValidationException):
    """Exception raised when tensor extents disagree."""

    pass


class NumericException(SubwordLMException):
    """Exception raised when a NaN or Inf surfaces."""

    pass
