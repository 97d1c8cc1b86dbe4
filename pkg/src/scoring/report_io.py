"""Report files: a summary comment line, then one TSV row per sentence."""

import re
from pathlib import Path

from ..models.base import EvalMode
from ..models.reports import EvalReport, SentenceScore
from ..utils.exceptions import DataException
from ..utils.helpers import ensure_parent

REPORT_HEADER = "sentence_id\tlength\tlog_prob"
_SUMMARY = re.compile(
    r"^# mode=(?P<mode>\w+) T=(?P<t>\d+) logprob=(?P<lp>\S+) ppl=(?P<ppl>\S+) unk=(?P<unk>\d+)$"
)


def write_report(report: EvalReport, path: str | Path) -> None:
    lines = [f"# {report.summary_line()}", REPORT_HEADER]
    lines += [f"{s.sentence_id}\t{s.length}\t{s.log_prob!r}" for s in report.per_sentence]
    ensure_parent(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> EvalReport:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataException(f"{path}: cannot read report: {exc}") from exc
    match = _SUMMARY.match(lines[0]) if lines else None
    if match is None or len(lines) < 2 or lines[1] != REPORT_HEADER:
        raise DataException(f"{path}:1: missing report summary or header")

    scores = []
    for number, line in enumerate(lines[2:], start=3):
        fields = line.split("\t")
        try:
            sentence_id, length, log_prob = int(fields[0]), int(fields[1]), float(fields[2])
        except (IndexError, ValueError) as exc:
            raise DataException(f"{path}:{number}: malformed report row") from exc
        scores.append(SentenceScore(sentence_id=sentence_id, log_prob=log_prob, length=length))

    try:
        return EvalReport(
            mode=EvalMode(match["mode"]),
            total_log_prob=float(match["lp"]),
            token_count=int(match["t"]),
            perplexity=float(match["ppl"]),
            unk_count=int(match["unk"]),
            per_sentence=scores,
        )
    except ValueError as exc:
        raise DataException(f"{path}: inconsistent report: {exc}") from exc
