"""Base language model interface and common functionality."""

from abc import ABC, abstractmethod
from collections.abc import Mapping
from typing import Any, ClassVar, Generic, TypeVar

import numpy as np
import structlog
from pydantic import BaseModel

from ..models.base import ModelKind
from ..numcore import Tensor
from ..utils.exceptions import ShapeException, ValidationException

logger = structlog.get_logger(__name__)

ConfigT = TypeVar("ConfigT", bound=BaseModel)


class BaseLanguageModel(ABC, Generic[ConfigT]):
    """A config plus a flat, name-addressed parameter table."""

    kind: ClassVar[ModelKind]

    def __init__(self, config: ConfigT, seed: int = 0):
        self.config = config
        self.logger = logger.bind(model=self.kind.value)
        self.params: dict[str, Tensor] = self.init_parameters(np.random.default_rng(seed))
        for name, tensor in self.params.items():
            tensor.name = name

    @abstractmethod
    def init_parameters(self, rng: np.random.Generator) -> dict[str, Tensor]:
        """Fresh parameters for ``self.config``."""

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def parameter_count(self) -> int:
        return sum(t.size for t in self.params.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.params.items()}

    def load_parameters(self, arrays: Mapping[str, np.ndarray]) -> None:
        """Replace parameter values; names and shapes must match exactly."""
        missing = set(self.params) - set(arrays)
        unexpected = set(arrays) - set(self.params)
        if missing or unexpected:
            raise ValidationException(
                "parameter names do not match the model",
                {"missing": sorted(missing), "unexpected": sorted(unexpected)},
            )
        for name, values in arrays.items():
            if values.shape != self.params[name].shape:
                raise ShapeException(
                    f"shape: {name} is {values.shape}, model expects {self.params[name].shape}"
                )
            self.params[name].data = np.array(values, dtype=np.float64)

    def get_info(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "parameters": self.parameter_count(),
            **self.config.model_dump(),
        }
