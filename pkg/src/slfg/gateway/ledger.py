"""Thread-safe accounting of model calls, tagged by video and phase."""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass

KINDS = ("describe", "abstract", "extract", "embed", "answer")

# "index" calls are one-time per video; "question" calls recur per question.
PHASES = ("index", "question")


@dataclass(frozen=True)
class CallRecord:
    kind: str
    video_id: str | None
    phase: str
    seconds: float


class CallLedger:
    def __init__(self, records: list[CallRecord] | None = None) -> None:
        self._lock = threading.Lock()
        self._records: list[CallRecord] = list(records or [])

    def record(self, kind: str, video_id: str | None, phase: str, seconds: float) -> None:
        if kind not in KINDS:
            raise ValueError(f"unknown call kind {kind!r}")
        if phase not in PHASES:
            raise ValueError(f"unknown call phase {phase!r}")
        with self._lock:
            self._records.append(CallRecord(kind, video_id, phase, seconds))

    @property
    def records(self) -> list[CallRecord]:
        with self._lock:
            return list(self._records)

    def slice(self, video_id: str | None = None, phase: str | None = None) -> CallLedger:
        return CallLedger([
            r for r in self.records
            if (video_id is None or r.video_id == video_id)
            and (phase is None or r.phase == phase)
        ])

    def counts(self) -> dict[str, int]:
        c = Counter(r.kind for r in self.records)
        return {k: c.get(k, 0) for k in KINDS}

    def seconds(self) -> float:
        return sum(r.seconds for r in self.records)

    @property
    def total(self) -> int:
        return len(self.records)

    @property
    def describe_calls(self) -> int:
        return self.counts()["describe"]

    @property
    def abstract_calls(self) -> int:
        return self.counts()["abstract"]

    @property
    def extract_calls(self) -> int:
        return self.counts()["extract"]

    @property
    def embed_calls(self) -> int:
        return self.counts()["embed"]

    @property
    def answer_calls(self) -> int:
        return self.counts()["answer"]

    def __len__(self) -> int:
        return self.total
