"""Multiple-choice evaluation over a JSON-lines dataset, with call accounting.

Dataset format, one object per line::

    {"video_id": "v1", "question": "...", "options": {"A": "...", "B": "..."},
     "answer": "B", "category": "detail_recognition"}

``category`` is optional. Abstentions and per-record failures count as wrong.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .errors import InvalidArgumentError, SchemaError
from .gateway import CallLedger, ModelGateway
from .inference import LETTERS, RunConfig, ask, load_or_build
from .store import IndexStore

log = logging.getLogger(__name__)

CATEGORIES = ("detail_recognition", "causal_reasoning")


@dataclass(frozen=True)
class EvalRecord:
    video_id: str
    question: str
    options: dict[str, str]
    answer: str
    category: str | None = None

    @classmethod
    def from_json(cls, data: Any) -> EvalRecord:
        if not isinstance(data, dict):
            raise ValueError("record must be a JSON object")
        missing = [k for k in ("video_id", "question", "options", "answer") if k not in data]
        if missing:
            raise ValueError(f"missing field(s) {missing}")
        unknown = set(data) - {"video_id", "question", "options", "answer", "category"}
        if unknown:
            raise ValueError(f"unknown field(s) {sorted(unknown)}")
        options = data["options"]
        if not isinstance(options, dict) or not 2 <= len(options) <= 6:
            raise ValueError("options must be an object with 2-6 entries")
        labels = list(options)
        if labels != list(LETTERS[:len(labels)]):
            raise ValueError(f"option labels must be consecutive letters from A, got {labels}")
        if any(not isinstance(v, str) or not v.strip() for v in options.values()):
            raise ValueError("option texts must be non-empty strings")
        answer = data["answer"]
        if answer not in options:
            raise ValueError(f"answer {answer!r} is not one of the option labels {labels}")
        for name in ("video_id", "question"):
            if not isinstance(data[name], str) or not data[name].strip():
                raise ValueError(f"{name} must be a non-empty string")
        category = data.get("category")
        if category is not None and not isinstance(category, str):
            raise ValueError("category must be a string")
        return cls(data["video_id"], data["question"], dict(options), answer, category)

    def to_json(self) -> dict[str, Any]:
        out = {"video_id": self.video_id, "question": self.question,
               "options": self.options, "answer": self.answer}
        if self.category is not None:
            out["category"] = self.category
        return out


def load_dataset(path: Path | str) -> list[EvalRecord]:
    """Parse every line; report all malformed lines at once and abort."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SchemaError(f"cannot read dataset {path}: {exc}") from exc
    records, problems = [], []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(EvalRecord.from_json(json.loads(line)))
        except (json.JSONDecodeError, ValueError) as exc:
            problems.append(f"line {lineno}: {exc}")
    if problems:
        raise SchemaError(f"{path}: " + "; ".join(problems))
    if not records:
        log.warning("dataset %s is empty", path)
    return records


def write_dataset(path: Path | str, records: Sequence[EvalRecord]) -> Path:
    path = Path(path)
    path.write_text("".join(json.dumps(r.to_json()) + "\n" for r in records))
    return path


@dataclass(frozen=True)
class AmortizationRow:
    questions: int
    avg_calls: float
    avg_seconds: float


def amortization_report(
    index_calls: float,
    per_question_calls: float,
    q_values: Sequence[int],
    index_seconds: float = 0.0,
    per_question_seconds: float = 0.0,
) -> list[AmortizationRow]:
    """Average cost per question when one index is shared by ``Q`` questions."""
    rows = []
    for q in q_values:
        if q < 1:
            raise InvalidArgumentError(f"question count must be >= 1, got {q}")
        rows.append(AmortizationRow(
            questions=q,
            avg_calls=(index_calls + q * per_question_calls) / q,
            avg_seconds=(index_seconds + q * per_question_seconds) / q,
        ))
    return rows


def amortization_from_ledger(ledger: CallLedger, questions: int, q_values: Sequence[int] | None = None) -> list[AmortizationRow]:
    """Split one video's ledger into one-time and per-question cost and amortize it."""
    if questions < 1:
        raise InvalidArgumentError("at least one question must have been executed")
    one_time = ledger.slice(phase="index")
    recurring = ledger.slice(phase="question")
    return amortization_report(
        one_time.total,
        recurring.total / questions,
        q_values or range(1, questions + 1),
        one_time.seconds(),
        recurring.seconds() / questions,
    )


@dataclass
class RecordResult:
    position: int
    video_id: str
    question: str
    category: str | None
    expected: str
    predicted: str | None
    correct: bool
    selected_groups: list[int] = field(default_factory=list)
    frame_count: int = 0
    error: str | None = None


@dataclass
class EvalReport:
    total: int
    correct: int
    accuracy: float
    abstained: int
    errors: int
    per_category: dict[str, dict[str, float]]
    per_video_calls: dict[str, dict[str, int]]
    amortization: dict[str, list[AmortizationRow]]
    results: list[RecordResult]

    def to_json(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "abstained": self.abstained,
            "errors": self.errors,
            "per_category": self.per_category,
            "per_video_calls": self.per_video_calls,
            "amortization": {v: [asdict(r) for r in rows] for v, rows in self.amortization.items()},
            "results": [asdict(r) for r in self.results],
        }

    def to_text(self) -> str:
        lines = [
            f"accuracy  {self.accuracy:.4f}  ({self.correct}/{self.total}, "
            f"{self.abstained} abstained, {self.errors} errors)",
        ]
        if self.per_category:
            lines.append("")
            lines.append(f"{'category':<24} {'n':>5} {'acc':>8}")
            for cat, row in sorted(self.per_category.items()):
                lines.append(f"{cat:<24} {int(row['total']):>5} {row['accuracy']:>8.4f}")
        for video, counts in sorted(self.per_video_calls.items()):
            lines.append("")
            lines.append(f"video {video}: " + " ".join(f"{k}={v}" for k, v in counts.items()))
            lines.append(f"  {'Q':>4} {'calls/q':>10} {'sec/q':>10}")
            for row in self.amortization.get(video, []):
                lines.append(f"  {row.questions:>4} {row.avg_calls:>10.2f} {row.avg_seconds:>10.3f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path | str) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path, text_path = out_dir / "report.json", out_dir / "report.txt"
        json_path.write_text(json.dumps(self.to_json(), indent=2) + "\n")
        text_path.write_text(self.to_text())
        return json_path, text_path


def _accuracy(correct: int, total: int) -> float:
    return correct / total if total else 0.0


def _evaluate_video(
    items: list[tuple[int, EvalRecord]],
    config: RunConfig,
    gateway: ModelGateway,
    store: IndexStore | None,
    frames_root: Path | str,
    dry_run: bool,
) -> list[RecordResult]:
    video_id = items[0][1].video_id
    results = []
    try:
        index = load_or_build(video_id, config, gateway, store, frames_root)
    except Exception as exc:  # noqa: BLE001 - recorded per record, run continues
        log.error("index for %s failed: %s", video_id, exc)
        return [
            RecordResult(pos, r.video_id, r.question, r.category, r.answer, None, False,
                         error=f"index: {exc}")
            for pos, r in items
        ]
    for pos, rec in items:
        try:
            ans = ask(video_id, rec.question, rec.options, config, gateway, store, frames_root,
                      dry_run=dry_run, index=index)
        except Exception as exc:  # noqa: BLE001
            log.error("record %d failed: %s", pos, exc)
            results.append(RecordResult(pos, rec.video_id, rec.question, rec.category, rec.answer,
                                        None, False, error=str(exc)))
            continue
        results.append(RecordResult(
            position=pos, video_id=video_id, question=rec.question, category=rec.category,
            expected=rec.answer, predicted=ans.choice, correct=ans.choice == rec.answer,
            selected_groups=list(ans.selected_groups), frame_count=ans.frame_count,
        ))
    return results


def run_eval(
    records: Sequence[EvalRecord],
    config: RunConfig,
    gateway: ModelGateway,
    store: IndexStore | None,
    frames_root: Path | str,
    *,
    jobs: int = 1,
    dry_run: bool = False,
) -> EvalReport:
    """Evaluate every record; videos run in parallel up to ``jobs``, one index build each."""
    if jobs < 1:
        raise InvalidArgumentError("jobs must be >= 1")
    start = len(gateway.ledger.records)
    by_video: dict[str, list[tuple[int, EvalRecord]]] = defaultdict(list)
    for pos, rec in enumerate(records):
        by_video[rec.video_id].append((pos, rec))

    work = list(by_video.values())
    with ThreadPoolExecutor(max_workers=max(1, min(jobs, len(work) or 1))) as pool:
        chunks = list(pool.map(
            lambda items: _evaluate_video(items, config, gateway, store, frames_root, dry_run), work
        ))
    results = sorted((r for chunk in chunks for r in chunk), key=lambda r: r.position)

    run_ledger = CallLedger(gateway.ledger.records[start:])
    per_video_calls, amortization = {}, {}
    for video_id, items in by_video.items():
        video_ledger = run_ledger.slice(video_id)
        counts = video_ledger.counts()
        counts["index_calls"] = video_ledger.slice(phase="index").total
        counts["question_calls"] = video_ledger.slice(phase="question").total
        per_video_calls[video_id] = counts
        amortization[video_id] = amortization_from_ledger(video_ledger, len(items))

    per_category: dict[str, dict[str, float]] = {}
    cats: dict[str, list[RecordResult]] = defaultdict(list)
    for r in results:
        if r.category is not None:
            cats[r.category].append(r)
    for cat, rows in cats.items():
        n_ok = sum(r.correct for r in rows)
        per_category[cat] = {"total": len(rows), "correct": n_ok, "accuracy": _accuracy(n_ok, len(rows))}

    correct = sum(r.correct for r in results)
    return EvalReport(
        total=len(results),
        correct=correct,
        accuracy=_accuracy(correct, len(results)),
        abstained=sum(r.predicted is None and r.error is None for r in results),
        errors=sum(r.error is not None for r in results),
        per_category=per_category,
        per_video_calls=per_video_calls,
        amortization=amortization,
        results=results,
    )
