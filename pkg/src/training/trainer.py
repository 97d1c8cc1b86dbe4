"""Training loops for the masked-LM encoder and Transformer-XL."""

import math
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import NoReturn

import numpy as np
import structlog

from ..corpus.batching import (
    EncodedCorpus,
    encode_corpus,
    shuffled_batches,
    stream_segments,
    token_stream,
)
from ..corpus.preprocess import load_and_split, load_corpus
from ..lm.base import BaseLanguageModel
from ..lm.mlm import MaskedLanguageModel, mask_tokens, mlm_loss, mlm_metrics
from ..lm.xl import TransformerXL, XLMemory, xl_loss
from ..models.base import Mode, ModelKind
from ..models.configs import RunConfig
from ..models.reports import MetricRecord
from ..numcore import LrSchedule, OptimizerState, Tape, Tensor, adam_step, clip_grad_norm, concat
from ..scoring.autoregressive import corpus_perplexity_ar
from ..scoring.pseudo import masked_token_accuracy
from ..subseg.baseline import load_lexicon
from ..subseg.vocab import SubwordVocab, load_vocab
from ..utils.exceptions import ConfigurationException, DataException, NumericException
from ..utils.helpers import make_rng, restore_rng, rng_state
from .checkpoint import TrainingState, check_resume, load_checkpoint, save_checkpoint
from .metric_log import MetricLog

logger = structlog.get_logger(__name__)

# Stream id for masking and dropout draws; shuffles use make_rng(seed, epoch).
TRAINING_STREAM = 2**32 - 1

Validator = Callable[[], MetricRecord | None]


@dataclass
class PreparedData:
    train: EncodedCorpus
    valid: EncodedCorpus
    vocab: SubwordVocab


@dataclass
class TrainResult:
    state: TrainingState
    checkpoint_path: Path
    rows: list[MetricRecord]


def prepare_data(run: RunConfig) -> PreparedData:
    """Load segmenter and vocabulary, split and encode the corpus."""
    paths = [run.data_path, run.lexicon_path, run.vocab_path]
    if run.valid_path:
        paths.append(run.valid_path)
    missing = [p for p in paths if not Path(p).exists()]
    if missing:
        raise ConfigurationException(f"missing input files: {', '.join(missing)}")

    segmenter = load_lexicon(run.lexicon_path)
    vocab = load_vocab(run.vocab_path, run.scheme)
    if run.valid_path:
        train, valid = load_corpus([run.data_path]), load_corpus([run.valid_path])
    else:
        train, valid = load_and_split([run.data_path], run.valid_fraction, run.seed)
    if not len(train):
        raise DataException("no training sentences after preprocessing")
    return PreparedData(
        train=encode_corpus(train, segmenter, vocab, run.scheme),
        valid=encode_corpus(valid, segmenter, vocab, run.scheme),
        vocab=vocab,
    )


def unigram_perplexity(train: EncodedCorpus, valid: EncodedCorpus, vocab_size: int) -> float:
    """Add-one unigram perplexity of ``valid`` over the positions an AR model predicts."""
    counts = np.zeros(vocab_size)
    for ids in train.sentences:
        np.add.at(counts, ids[1:], 1.0)
    log_probs = np.log((counts + 1.0) / (counts.sum() + vocab_size))
    targets = np.concatenate([ids[1:] for ids in valid.sentences])
    return float(np.exp(-log_probs[targets].mean()))


class _Run:
    """Shared bookkeeping: model, optimizer, RNG, schedule, log and checkpoints."""

    def __init__(
        self,
        run: RunConfig,
        model: BaseLanguageModel,
        data: PreparedData,
        resume_from: str | Path | None,
    ):
        self.run = run
        self.model = model
        self.data = data
        self.checkpoint_dir = Path(run.checkpoint_dir)
        self.logger = logger.bind(kind=run.kind.value, seed=run.seed)
        self.schedule = (
            LrSchedule(
                peak_lr=run.peak_lr,
                warmup_steps=run.warmup_steps,
                total_steps=run.total_steps,
                min_lr=run.min_lr,
            )
            if run.total_steps > 0
            else None
        )
        self.optimizer = OptimizerState.for_parameters(model.parameters())
        self.rng = make_rng(run.seed, TRAINING_STREAM)
        self.step = self.epoch = self.cursor = 0
        self.memory: list[np.ndarray] = []

        resume_step = None
        if resume_from is not None:
            state = load_checkpoint(resume_from)
            check_resume(state, run)
            if state.vocab_size != len(data.vocab):
                raise DataException("vocabulary size differs from the checkpoint")
            model.load_parameters(state.params)
            self.optimizer = state.optimizer
            self.rng = restore_rng(state.rng_state)
            self.step, self.epoch, self.cursor = state.step, state.epoch, state.cursor
            self.memory = state.memory
            resume_step = state.step
            self.logger.info("Resuming", step=self.step, epoch=self.epoch)
        self.log = MetricLog(run.resolved_metric_log(), resume_step)

    def state(self) -> TrainingState:
        return TrainingState(
            config=self.run,
            vocab_size=len(self.data.vocab),
            params={name: t.data.copy() for name, t in self.model.parameters().items()},
            optimizer=OptimizerState(
                beta1=self.optimizer.beta1,
                beta2=self.optimizer.beta2,
                eps=self.optimizer.eps,
                lr=self.optimizer.lr,
                t=self.optimizer.t,
                m={k: v.copy() for k, v in self.optimizer.m.items()},
                v={k: v.copy() for k, v in self.optimizer.v.items()},
            ),
            rng_state=rng_state(self.rng),
            step=self.step,
            epoch=self.epoch,
            cursor=self.cursor,
            memory=[m.copy() for m in self.memory],
        )

    def lr(self, step: int | None = None) -> float:
        step = self.step if step is None else step
        return self.schedule.lr_at(step) if self.schedule else 0.0

    def update(self, loss: Tensor, tape: Tape) -> float:
        """Backward, clip and Adam at ``lr_at(step + 1)``, then advance the step.

        Returns the learning rate used.
        """
        params = self.model.parameters()
        for tensor in params.values():
            tensor.zero_grad()
        tape.backward(loss)
        grads = {name: t.grad for name, t in params.items() if t.grad is not None}
        clip_grad_norm(grads, self.run.grad_clip)
        lr = self.lr(self.step + 1)
        adam_step(params, grads, self.optimizer, lr)
        self.step += 1
        return lr

    def after_step(self, validate: Validator) -> None:
        if self.step % self.run.valid_every == 0:
            self.validate(validate)
        every = self.run.checkpoint_every
        if every and self.step % every == 0:
            save_checkpoint(self.state(), self.checkpoint_dir / f"step-{self.step:08d}.spck")

    def validate(self, validate: Validator) -> None:
        record = validate()
        if record is not None:
            self.log.append(record)

    def emergency(self, exc: NumericException) -> NoReturn:
        path = save_checkpoint(self.state(), self.checkpoint_dir / "emergency.spck")
        self.logger.error("Non-finite values, training aborted", step=self.step, checkpoint=str(path))
        raise NumericException("non-finite loss", {"step": self.step, "checkpoint": str(path)}) from exc

    def finish(self, validate: Validator) -> TrainResult:
        if self.step == self.run.total_steps > 0 and self.step % self.run.valid_every:
            self.validate(validate)
        path = save_checkpoint(self.state(), self.checkpoint_dir / "final.spck")
        self.logger.info("Training finished", step=self.step, rows=len(self.log.rows))
        return TrainResult(state=self.state(), checkpoint_path=path, rows=list(self.log.rows))


def _target_step(run: RunConfig, stop_after: int | None) -> int:
    return run.total_steps if stop_after is None else min(stop_after, run.total_steps)


def train_mlm(
    run: RunConfig,
    data: PreparedData | None = None,
    resume_from: str | Path | None = None,
    stop_after: int | None = None,
) -> TrainResult:
    """Masked-LM training for ``run.total_steps`` steps (or until ``stop_after``)."""
    if run.kind is not ModelKind.MLM:
        raise ConfigurationException(f"train_mlm needs kind=mlm, got {run.kind.value}")
    data = data or prepare_data(run)
    vocab_size = len(data.vocab)
    model = MaskedLanguageModel(run.encoder_config(vocab_size), seed=run.seed)
    policy = run.mask_policy()
    state = _Run(run, model, data, resume_from)
    max_len = min(run.max_len, model.max_length)
    valid = [ids for ids in data.valid.sentences if ids.size <= max_len]

    def validate() -> MetricRecord | None:
        if not valid:
            return None
        metrics = masked_token_accuracy(model, valid, policy, vocab_size, seed=run.seed)
        return MetricRecord(
            step=state.step,
            lr=state.lr(),
            loss=metrics.masked_lm_loss,
            metric=metrics.masked_lm_accuracy,
            split="valid",
        )

    target = _target_step(run, stop_after)
    if policy.mask_prob == 0.0 and state.step < target:
        raise DataException("no supervised positions", {"mask_prob": policy.mask_prob})
    while state.step < target:
        batches = list(
            shuffled_batches(data.train, run.batch_size, run.seed, state.epoch, max_len)
        )
        if not batches:
            raise DataException("no training sentence fits max_len")
        scanned_from = state.cursor
        supervised = 0
        while state.cursor < len(batches) and state.step < target:
            ids = batches[state.cursor]
            state.cursor += 1
            batch = mask_tokens(ids, policy, state.rng, vocab_size)
            if batch.num_targets == 0:
                continue
            supervised += 1
            try:
                with Tape() as tape:
                    logits = model.encode(batch.input_ids, batch.padding_mask, Mode.TRAIN, state.rng)
                    loss = mlm_loss(logits, batch.targets)
                lr = state.update(loss, tape)
            except NumericException as exc:
                state.emergency(exc)
            metrics = mlm_metrics(logits, batch.targets)
            state.log.append(
                MetricRecord(
                    step=state.step,
                    lr=lr,
                    loss=loss.item(),
                    metric=metrics.masked_lm_accuracy,
                    split="train",
                )
            )
            state.after_step(validate)
        if state.cursor >= len(batches):
            if supervised == 0 and scanned_from == 0:
                raise DataException(
                    "no supervised positions",
                    {"epoch": state.epoch, "mask_prob": policy.mask_prob},
                )
            state.epoch += 1
            state.cursor = 0
    return state.finish(validate)


def train_xl(
    run: RunConfig,
    data: PreparedData | None = None,
    resume_from: str | Path | None = None,
    stop_after: int | None = None,
) -> TrainResult:
    """Transformer-XL training on the shuffled token stream.

    By default memory carries across consecutive segments of an epoch's
    stream and resets at epoch boundaries. With
    ``reset_memory_per_sentence`` each step is a padded batch of sentences,
    read segment by segment from empty memory.
    """
    if run.kind is not ModelKind.XL:
        raise ConfigurationException(f"train_xl needs kind=xl, got {run.kind.value}")
    data = data or prepare_data(run)
    model = TransformerXL(run.xl_config(len(data.vocab)), seed=run.seed)
    state = _Run(run, model, data, resume_from)
    seg_len = model.config.seg_len

    def validate() -> MetricRecord | None:
        if not len(data.valid):
            return None
        report = corpus_perplexity_ar(model, data.valid.sentences)
        return MetricRecord(
            step=state.step,
            lr=state.lr(),
            loss=-report.total_log_prob / report.token_count,
            metric=report.perplexity,
            split="valid",
        )

    target = _target_step(run, stop_after)
    while state.step < target:
        if run.reset_memory_per_sentence:
            steps = list(
                shuffled_batches(data.train, run.batch_size, run.seed, state.epoch, run.max_len)
            )
        else:
            stream = token_stream(data.train, run.seed, state.epoch)
            steps = list(stream_segments(stream, run.batch_size, seg_len))
        if not steps:
            raise DataException("no training data for this epoch")
        if state.cursor == 0:
            state.memory = []
        while state.cursor < len(steps) and state.step < target:
            item = steps[state.cursor]
            state.cursor += 1
            try:
                with Tape() as tape:
                    if run.reset_memory_per_sentence:
                        logits, targets = _sentence_batch_logits(model, item, seg_len, state.rng)
                    else:
                        inputs, targets = item
                        memory = XLMemory(state.memory) if state.memory else model.init_memory(run.batch_size)
                        logits, memory = model.forward_segment(inputs, memory, Mode.TRAIN, state.rng)
                    loss = xl_loss(logits, targets)
                lr = state.update(loss, tape)
            except NumericException as exc:
                state.emergency(exc)
            if not run.reset_memory_per_sentence:
                state.memory = memory.layers
            value = loss.item()
            state.log.append(
                MetricRecord(step=state.step, lr=lr, loss=value, metric=math.exp(value), split="train")
            )
            state.after_step(validate)
        if state.cursor >= len(steps):
            state.epoch += 1
            state.cursor = 0
            state.memory = []
    return state.finish(validate)


def _sentence_batch_logits(
    model: TransformerXL, batch: np.ndarray, seg_len: int, rng: np.random.Generator
) -> tuple[Tensor, np.ndarray]:
    """Logits for a padded sentence batch read from empty memory, segment by segment."""
    inputs, targets = batch[:, :-1], batch[:, 1:]
    memory = model.init_memory(batch.shape[0])
    pieces = []
    for start in range(0, inputs.shape[1], seg_len):
        logits, memory = model.forward_segment(
            inputs[:, start : start + seg_len], memory, Mode.TRAIN, rng
        )
        pieces.append(logits)
    logits = pieces[0] if len(pieces) == 1 else concat(pieces, axis=1)
    return logits, targets


def build_model(run: RunConfig, vocab_size: int) -> MaskedLanguageModel | TransformerXL:
    if run.kind is ModelKind.MLM:
        return MaskedLanguageModel(run.encoder_config(vocab_size), seed=run.seed)
    return TransformerXL(run.xl_config(vocab_size), seed=run.seed)


def model_from_checkpoint(
    path: str | Path,
) -> tuple[MaskedLanguageModel | TransformerXL, TrainingState]:
    """The model a checkpoint was saved from, with its trained parameters."""
    state = load_checkpoint(path)
    model = build_model(state.config, state.vocab_size)
    model.load_parameters(state.params)
    return model, state
