"""Command-line entry point: ``subword-lm <command> [flags]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure. Results go to stdout, logs to stderr.
"""

import argparse
import sys
from collections.abc import Sequence
from typing import Any

import structlog

from ..core.config import get_settings
from ..core.logging import setup_logging
from ..models.base import MarkingScheme
from ..utils.exceptions import (
    ConfigurationException,
    DataException,
    NumericException,
    SegmentationException,
    SubwordLMException,
    ValidationException,
)
from . import commands

logger = structlog.get_logger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    """Raised instead of argparse's own exit so every failure maps to an exit code."""


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting and keeps the flags and commands it defines."""

    def __init__(self, *args: Any, **kwargs: Any):
        self.flags: list[argparse.Action] = []
        self.commands: dict[str, ArgumentParser] = {}
        super().__init__(*args, **kwargs)

    def add_argument(self, *args: Any, **kwargs: Any) -> argparse.Action:
        action = super().add_argument(*args, **kwargs)
        self.flags.append(action)
        return action

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _common_flags() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random draw")
    common.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="log level (overrides LOG_LEVEL)",
    )
    common.add_argument(
        "--log-format",
        choices=["console", "json"],
        default=None,
        help="log renderer (overrides LOG_FORMAT)",
    )
    return common


def _scheme(parser: argparse.ArgumentParser, default: str | None = "mm") -> None:
    parser.add_argument(
        "--scheme",
        choices=[s.value for s in MarkingScheme],
        default=default,
        help="boundary marking: m = left-marked, mm = left+right-marked",
    )


def build_parser() -> ArgumentParser:
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = ArgumentParser(
        prog="subword-lm",
        description="Subword segmentation and language modeling toolkit.",
        formatter_class=formatter,
    )
    parser.add_argument("--version", action="version", version=get_settings().app_version)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    common = [_common_flags()]

    def command(name: str, help_text: str) -> ArgumentParser:
        child = sub.add_parser(name, help=help_text, parents=common, formatter_class=formatter)
        # flags inherited from parents are copied without add_argument
        child.flags[1:1] = common[0].flags
        parser.commands[name] = child
        return child

    p = command("seg-train", "train the unsupervised segmentation model")
    p.add_argument("--in", dest="inputs", action="append", required=True, help="corpus file (repeatable)")
    p.add_argument("--alpha", type=float, default=0.001, help="corpus weight")
    p.add_argument("--epsilon", type=float, default=0.1, help="stop when a pass gains fewer bits")
    p.add_argument("--max-epochs", type=int, default=100, help="upper bound on training passes")
    p.add_argument("--out", required=True, help="lexicon file to write")
    p.set_defaults(handler=commands.seg_train)

    p = command("seg-apply", "segment and mark a corpus")
    p.add_argument("--lexicon", required=True, help="lexicon file")
    p.add_argument("--in", dest="inputs", action="append", required=True, help="corpus file (repeatable)")
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    _scheme(p)
    p.set_defaults(handler=commands.seg_apply)

    p = command("vocab-build", "build the marked-subword vocabulary")
    p.add_argument("--lexicon", required=True, help="lexicon file")
    p.add_argument("--in", dest="inputs", action="append", required=True, help="corpus file (repeatable)")
    p.add_argument("--out", required=True, help="vocabulary file to write")
    _scheme(p)
    p.set_defaults(handler=commands.vocab_build)

    p = command("encode", "encode a corpus into a record file")
    p.add_argument("--lexicon", required=True, help="lexicon file")
    p.add_argument("--vocab", required=True, help="vocabulary file")
    p.add_argument("--in", dest="inputs", action="append", required=True, help="corpus file (repeatable)")
    p.add_argument("--out", required=True, help="record file to write")
    p.add_argument("--manifest", default=None, help="also write the corpus manifest here")
    _scheme(p)
    p.set_defaults(handler=commands.encode)

    p = command("train", "train a language model from a run config")
    p.add_argument("--config", required=True, help="flat key=value run config")
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.set_defaults(handler=commands.train)

    for name, help_text, handler in (
        ("eval-ppl", "autoregressive perplexity of an XL checkpoint", commands.eval_ppl),
        ("eval-pseudo-ppl", "pseudo-perplexity of a masked-LM checkpoint", commands.eval_pseudo_ppl),
        ("mask-accuracy", "masked-LM loss and accuracy on held-out text", commands.mask_accuracy),
    ):
        p = command(name, help_text)
        p.add_argument("--model", required=True, help="checkpoint file")
        p.add_argument("--data", required=True, help="evaluation text, one sentence per line")
        p.add_argument("--lexicon", default=None, help="lexicon file (default: from the checkpoint)")
        p.add_argument("--vocab", default=None, help="vocabulary file (default: from the checkpoint)")
        p.add_argument("--report", default=None, help="per-sentence TSV report to write")
        _scheme(p, default=None)
        if name == "eval-ppl":
            p.add_argument("--seg-len", type=int, default=None, help="override the trained seg_len")
            p.add_argument("--mem-len", type=int, default=None, help="override the trained mem_len")
            p.add_argument("--stream", action="store_true", help="carry memory across sentences")
        else:
            p.add_argument("--batch-size", type=int, default=64, help="masked variants per forward")
        p.set_defaults(handler=handler)

    p = command("score-sentence", "log-probability of one sentence")
    p.add_argument("--model", required=True, help="checkpoint file")
    p.add_argument("--sentence", required=True, help="raw sentence text")
    p.add_argument("--lexicon", default=None, help="lexicon file (default: from the checkpoint)")
    p.add_argument("--vocab", default=None, help="vocabulary file (default: from the checkpoint)")
    _scheme(p, default=None)
    p.set_defaults(handler=commands.score_sentence)

    return parser


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, NumericException):
        return EXIT_NUMERIC
    if isinstance(exc, DataException | SegmentationException):
        return EXIT_DATA
    if isinstance(exc, UsageError | ConfigurationException | ValidationException):
        return EXIT_USAGE
    return EXIT_DATA


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(args.log_level, args.log_format)
    log = logger.bind(command=args.command)
    log.info("Command started")
    try:
        args.handler(args)
    except SubwordLMException as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        log.error("Command failed", error=exc.message, **exc.details)
        return exit_code_for(exc)
    log.info("Command finished")
    return EXIT_OK


def main() -> None:
    sys.exit(run())
