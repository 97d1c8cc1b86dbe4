"""Tensor arithmetic, reverse-mode autodiff, Adam and the LR schedule."""

from .gradcheck import GradCheckResult, gradcheck
from .ops import (
    IGNORE_ID,
    add,
    concat,
    cross_entropy,
    div,
    dropout,
    embedding,
    gather_last,
    gelu,
    layer_norm,
    log_softmax,
    matmul,
    mean,
    mul,
    neg,
    reshape,
    softmax,
    sub,
    transpose,
)
from .optim import OptimizerState, adam_step, clip_grad_norm
from .schedule import LrSchedule, lr_at
from .tensor import Tape, Tensor, backward, current_tape, no_grad
