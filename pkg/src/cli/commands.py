"""Command handlers. Each takes the parsed namespace and prints its result."""

import argparse
import sys

import structlog

from ..core.config_file import echo_config, parse_config
from ..corpus.batching import EncodedCorpus, encode_corpus, encode_sentence
from ..corpus.preprocess import load_corpus, preprocess_line, word_counts, write_manifest
from ..corpus.records import write_records
from ..lm.mlm import MaskedLanguageModel
from ..lm.xl import TransformerXL
from ..models.base import MarkingScheme, ModelKind
from ..models.reports import EvalReport
from ..scoring.autoregressive import corpus_perplexity_ar, sentence_log_prob_ar
from ..scoring.pseudo import corpus_pseudo_perplexity, masked_token_accuracy, sentence_pseudo_log_prob
from ..scoring.report_io import write_report
from ..subseg.baseline import load_lexicon, save_lexicon, train_segmentation
from ..subseg.marking import mark_sentence
from ..subseg.vocab import build_vocab, load_vocab, save_vocab
from ..training.checkpoint import TrainingState
from ..training.trainer import model_from_checkpoint, train_mlm, train_xl
from ..utils.exceptions import DataException, ValidationException
from ..utils.helpers import ensure_parent

logger = structlog.get_logger(__name__)


def _seed(args: argparse.Namespace) -> int:
    return 0 if args.seed is None else args.seed


def seg_train(args: argparse.Namespace) -> None:
    corpus = load_corpus(args.inputs)
    model = train_segmentation(
        word_counts(corpus.sentences),
        args.alpha,
        epsilon=args.epsilon,
        seed=_seed(args),
        max_epochs=args.max_epochs,
    )
    save_lexicon(model, args.out)
    print(f"lexicon={args.out} types={model.types} cost={model.cost()!r}")


def seg_apply(args: argparse.Namespace) -> None:
    model = load_lexicon(args.lexicon)
    scheme = MarkingScheme(args.scheme)
    lines = [" ".join(mark_sentence(model, s, scheme)) for s in load_corpus(args.inputs).sentences]
    text = "".join(f"{line}\n" for line in lines)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        ensure_parent(args.out).write_text(text, encoding="utf-8")


def vocab_build(args: argparse.Namespace) -> None:
    model = load_lexicon(args.lexicon)
    vocab = build_vocab(load_corpus(args.inputs).sentences, model, MarkingScheme(args.scheme))
    save_vocab(vocab, args.out)
    print(f"vocab={args.out} size={len(vocab)}")


def encode(args: argparse.Namespace) -> None:
    scheme = MarkingScheme(args.scheme)
    model = load_lexicon(args.lexicon)
    vocab = load_vocab(args.vocab, scheme)
    corpus = load_corpus(args.inputs)
    encoded = encode_corpus(corpus, model, vocab, scheme)
    write_records([ids.tolist() for ids in encoded.sentences], args.out, len(vocab))
    if args.manifest:
        write_manifest(corpus.manifest, args.manifest)
    print(f"records={args.out} count={len(encoded)} unk={encoded.unk_count}")


def train(args: argparse.Namespace) -> None:
    run = parse_config(args.config)
    if args.seed is not None:
        run = run.model_copy(update={"seed": args.seed})
    sys.stdout.write(echo_config(run))
    logger.info("Run configured", kind=run.kind.value, total_steps=run.total_steps, seed=run.seed)
    trainer = train_mlm if run.kind is ModelKind.MLM else train_xl
    result = trainer(run, resume_from=args.resume)
    final = result.rows[-1] if result.rows else None
    summary = f"checkpoint={result.checkpoint_path} step={result.state.step}"
    if final is not None:
        summary += f" loss={final.loss!r} metric={final.metric!r} split={final.split}"
    print(summary)


def _load_for_eval(
    args: argparse.Namespace, kind: ModelKind | None
) -> tuple[MaskedLanguageModel | TransformerXL, TrainingState, MarkingScheme]:
    model, state = model_from_checkpoint(args.model)
    if kind is not None and state.config.kind is not kind:
        raise ValidationException(
            "model kind mismatch",
            {"checkpoint": state.config.kind.value, "command_needs": kind.value},
        )
    scheme = state.config.scheme
    if args.scheme is not None and MarkingScheme(args.scheme) is not scheme:
        raise ValidationException(
            f"--scheme {args.scheme} differs from the checkpoint's {scheme.value}"
        )
    return model, state, scheme


def _encode_eval_data(
    args: argparse.Namespace, state: TrainingState, scheme: MarkingScheme
) -> EncodedCorpus:
    lexicon = args.lexicon or state.config.lexicon_path
    vocab = load_vocab(args.vocab or state.config.vocab_path, scheme)
    if len(vocab) != state.vocab_size:
        raise DataException(
            f"vocabulary has {len(vocab)} tokens, checkpoint was trained with {state.vocab_size}"
        )
    corpus = load_corpus([args.data])
    if not len(corpus):
        raise DataException(f"{args.data}: no sentences after preprocessing")
    return encode_corpus(corpus, load_lexicon(lexicon), vocab, scheme)


def _report(report: EvalReport, args: argparse.Namespace) -> None:
    if args.report:
        write_report(report, args.report)
    print(report.summary_line())


def eval_ppl(args: argparse.Namespace) -> None:
    model, state, scheme = _load_for_eval(args, ModelKind.XL)
    assert isinstance(model, TransformerXL)
    overrides = {
        key: value
        for key, value in (("seg_len", args.seg_len), ("mem_len", args.mem_len))
        if value is not None
    }
    if overrides:
        model.config = type(model.config).model_validate(model.config.model_dump() | overrides)
    data = _encode_eval_data(args, state, scheme)
    report = corpus_perplexity_ar(model, data.sentences, data.unk_count, stream=args.stream)
    _report(report, args)


def eval_pseudo_ppl(args: argparse.Namespace) -> None:
    model, state, scheme = _load_for_eval(args, ModelKind.MLM)
    assert isinstance(model, MaskedLanguageModel)
    data = _encode_eval_data(args, state, scheme)
    _check_lengths(data, model.max_length)
    report = corpus_pseudo_perplexity(model, data.sentences, data.unk_count, args.batch_size)
    _report(report, args)


def mask_accuracy(args: argparse.Namespace) -> None:
    model, state, scheme = _load_for_eval(args, ModelKind.MLM)
    assert isinstance(model, MaskedLanguageModel)
    data = _encode_eval_data(args, state, scheme)
    _check_lengths(data, model.max_length)
    metrics = masked_token_accuracy(
        model,
        data.sentences,
        state.config.mask_policy(),
        state.vocab_size,
        seed=_seed(args),
        batch_size=args.batch_size,
    )
    print(
        f"masked_lm_loss={metrics.masked_lm_loss!r} "
        f"masked_lm_accuracy={metrics.masked_lm_accuracy!r} count={metrics.count}"
    )


def _check_lengths(data: EncodedCorpus, max_length: int) -> None:
    for index, ids in enumerate(data.sentences):
        if ids.size > max_length:
            raise ValidationException(
                f"sequence too long: sentence {index + 1} has {ids.size} positions",
                {"max_length": max_length},
            )


def score_sentence(args: argparse.Namespace) -> None:
    model, state, scheme = _load_for_eval(args, None)
    sentence = preprocess_line(args.sentence)
    if sentence is None:
        raise ValidationException("sentence is empty after preprocessing")
    lexicon = load_lexicon(args.lexicon or state.config.lexicon_path)
    vocab = load_vocab(args.vocab or state.config.vocab_path, scheme)
    ids, unknown = encode_sentence(sentence, lexicon, vocab, scheme)
    if isinstance(model, TransformerXL):
        log_prob, length = sentence_log_prob_ar(model, ids)
        mode = "ar"
    else:
        log_prob, length = sentence_pseudo_log_prob(model, ids)
        mode = "pseudo"
    print(f"mode={mode} length={length} logprob={log_prob!r} unk={unknown}")

