"""Append-only tab-separated training metric log."""

from pathlib import Path

import structlog

from ..models.reports import MetricRecord
from ..utils.exceptions import DataException
from ..utils.helpers import ensure_parent

logger = structlog.get_logger(__name__)

METRIC_HEADER = "step\tlr\tloss\tmetric\tsplit"


def read_metric_log(path: str | Path) -> list[MetricRecord]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataException(f"{path}: cannot read metric log: {exc}") from exc
    if not lines or lines[0] != METRIC_HEADER:
        raise DataException(f"{path}:1: missing metric log header")
    rows = []
    for number, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        try:
            rows.append(
                MetricRecord(
                    step=int(fields[0]),
                    lr=float(fields[1]),
                    loss=float(fields[2]),
                    metric=float(fields[3]),
                    split=fields[4],
                )
            )
        except (IndexError, ValueError) as exc:
            raise DataException(f"{path}:{number}: malformed metric row") from exc
    return rows


class MetricLog:
    """Writes each row as it arrives and keeps every row in memory.

    Opening with ``resume_step`` keeps the existing rows up to that step and
    drops anything a crashed run wrote after it.
    """

    def __init__(self, path: str | Path, resume_step: int | None = None):
        self.path = ensure_parent(path)
        self.rows: list[MetricRecord] = []
        if resume_step is not None and self.path.exists():
            self.rows = [r for r in read_metric_log(self.path) if r.step <= resume_step]
        lines = [METRIC_HEADER] + [r.to_tsv() for r in self.rows]
        self.path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.logger = logger.bind(path=str(self.path))

    def append(self, record: MetricRecord) -> None:
        self.rows.append(record)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(record.to_tsv() + "\n")
        if record.split == "valid":
            self.logger.info("Validation", step=record.step, loss=record.loss, metric=record.metric)
        else:
            self.logger.debug(
                "Training step", step=record.step, lr=record.lr, loss=record.loss, metric=record.metric
            )

    def train_rows(self) -> list[MetricRecord]:
        return [r for r in self.rows if r.split == "train"]

    def valid_rows(self) -> list[MetricRecord]:
        return [r for r in self.rows if r.split == "valid"]
