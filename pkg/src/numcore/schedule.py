"""Linear warmup followed by cosine annealing."""

import math

from pydantic import BaseModel, Field, model_validator


class LrSchedule(BaseModel):
    peak_lr: float = Field(..., ge=0.0)
    warmup_steps: int = Field(..., gt=0)
    total_steps: int = Field(..., gt=0)
    min_lr: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def check_steps(self) -> "LrSchedule":
        if self.warmup_steps > self.total_steps:
            raise ValueError("warmup_steps must not exceed total_steps")
        if self.min_lr > self.peak_lr:
            raise ValueError("min_lr must not exceed peak_lr")
        return self

    def lr_at(self, step: int) -> float:
        return lr_at(self, step)


def lr_at(schedule: LrSchedule, step: int) -> float:
    """0 at step 0, ``peak_lr`` at ``warmup_steps``, ``min_lr`` from ``total_steps`` on."""
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    if step < schedule.warmup_steps:
        return schedule.peak_lr * step / schedule.warmup_steps
    span = max(1, schedule.total_steps - schedule.warmup_steps)
    progress = min(1.0, (step - schedule.warmup_steps) / span)
    cosine = (1.0 + math.cos(math.pi * progress)) / 2.0
    return schedule.min_lr + (schedule.peak_lr - schedule.min_lr) * cosine
