"""End-to-end question answering over a scene index."""

from __future__ import annotations

import re
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import InvalidArgumentError, StageError
from .frames import FrameDirectory
from .gateway import ModelGateway
from .indexing import build_index, index_key
from .localization import GroupScore, QueryScene, extract_query_scene, score_all
from .reorganization import SelectionConfig, SelectionPlan, build_plan
from .sampling import SamplingConfig
from .scene_index import SceneIndex
from .store import IndexStore

LETTERS = "ABCDEF"


@dataclass(frozen=True)
class RunConfig:
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    group_size: int = 16
    selection: SelectionConfig = field(default_factory=SelectionConfig)

    def __post_init__(self) -> None:
        if self.group_size < 1:
            raise InvalidArgumentError(f"group_size must be >= 1, got {self.group_size}")


@dataclass(frozen=True)
class Answer:
    video_id: str
    question: str
    choice: str | None  # None means the model's reply could not be parsed (abstain)
    raw_text: str
    selected_groups: tuple[int, ...]
    frame_count: int
    frame_timestamps_s: tuple[float, ...]
    query_scene: str
    scores: tuple[GroupScore, ...]
    plan: SelectionPlan
    timings: dict[str, float]
    dry_run: bool = False

    @property
    def abstained(self) -> bool:
        return self.choice is None


def normalize_options(options: Mapping[str, str] | Sequence[str]) -> dict[str, str]:
    """Letter-keyed options; a plain sequence is lettered A, B, C... in order."""
    if isinstance(options, Mapping):
        opts = {str(k).strip().upper(): str(v) for k, v in options.items()}
    else:
        opts = {LETTERS[i]: str(v) for i, v in enumerate(list(options)[:len(LETTERS)])}
        if len(opts) != len(options):
            raise InvalidArgumentError("at most 6 options are supported")
    if not 2 <= len(opts) <= 6:
        raise InvalidArgumentError(f"need 2-6 options, got {len(opts)}")
    if any(k not in LETTERS or len(k) != 1 for k in opts):
        raise InvalidArgumentError(f"option labels must be letters A-F, got {sorted(opts)}")
    return opts


_LEADING = re.compile(r"^\s*(?:\(([A-F])\)|\[([A-F])\]|([A-F])(?=\s*$|[.:,)\]]))")
_ANSWER_IS = re.compile(r"answer\s*(?:is|:)\s*(?:\(([a-f])\)|\[([a-f])\]|([a-f])\b)", re.IGNORECASE)


def _answer_phrase(text: str) -> str | None:
    for m in _ANSWER_IS.finditer(text):
        bracketed = m.group(1) or m.group(2)
        if bracketed:
            return bracketed.upper()
        letter, rest = m.group(3), text[m.end(3):]
        # "the answer is a red car": a bare lowercase letter followed by a word is prose
        if letter.isupper() or not rest.strip() or rest[0] in ".,;:!)]":
            return letter.upper()
    return None


def parse_choice(raw: str, options: Mapping[str, str] | Sequence[str]) -> str | None:
    """Option letter picked by ``raw``, or ``None`` to abstain. Never raises.

    Rules, first match wins: a lone leading capital letter (``B``, ``B.``,
    ``(B)``); an "answer is X" phrase in any case; containment of exactly one
    option's text.
    """
    try:
        if isinstance(options, Mapping):
            labels = {str(k).upper(): str(v) for k, v in options.items()}
        else:
            labels = {LETTERS[i]: str(v) for i, v in enumerate(options) if i < len(LETTERS)}
        text = raw if isinstance(raw, str) else str(raw)
        m = _LEADING.match(text)
        if m:
            letter = next(g for g in m.groups() if g)
            if letter in labels:
                return letter
        letter = _answer_phrase(text)
        if letter in labels:
            return letter
        lowered = text.lower()
        hits = [k for k, v in labels.items() if v.strip() and v.strip().lower() in lowered]
        if len(hits) == 1:
            return hits[0]
    except Exception:  # noqa: BLE001 - parsing is total by contract
        return None
    return None


@contextmanager
def _stage(name: str, timings: dict[str, float]) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - start


def load_or_build(
    video_id: str, config: RunConfig, gateway: ModelGateway, store: IndexStore | None,
    frames_root: Path | str,
) -> SceneIndex:
    if store is not None:
        cached = store.load(index_key(video_id, config.sampling, config.group_size, gateway))
        if cached is not None:
            return cached
    source = FrameDirectory(Path(frames_root) / video_id)
    if source.video_id != video_id:
        raise InvalidArgumentError(
            f"manifest in {source.path} is for video {source.video_id!r}, not {video_id!r}"
        )
    return build_index(source, config.sampling, config.group_size, gateway, store)


def ask(
    video_id: str,
    question: str,
    options: Mapping[str, str] | Sequence[str],
    config: RunConfig,
    gateway: ModelGateway,
    store: IndexStore | None,
    frames_root: Path | str,
    *,
    dry_run: bool = False,
    index: SceneIndex | None = None,
) -> Answer:
    """Answer one multiple-choice question; ``dry_run`` stops before the answer call."""
    timings: dict[str, float] = {}
    with _stage("options", timings):
        opts = normalize_options(options)
        if not question or not question.strip():
            raise InvalidArgumentError("question must be non-empty")
    with _stage("index", timings):
        if index is None:
            index = load_or_build(video_id, config, gateway, store, frames_root)
    with _stage("query_scene", timings):
        query: QueryScene = extract_query_scene(question, gateway, video_id)
    with _stage("localize", timings):
        scores = score_all(index, query)
    with _stage("reorganize", timings):
        plan = build_plan(index, scores, config.selection)
    refs = [f.image_ref for f in plan.final_frames]

    raw, choice = "", None
    if not dry_run:
        with _stage("answer", timings):
            raw = gateway.answer(refs, question, opts, video_id=video_id)
        with _stage("parse", timings):
            choice = parse_choice(raw, opts)
    return Answer(
        video_id=video_id,
        question=question,
        choice=choice,
        raw_text=raw,
        selected_groups=plan.selected,
        frame_count=len(refs),
        frame_timestamps_s=tuple(plan.frame_timestamps_s),
        query_scene=query.text,
        scores=tuple(scores),
        plan=plan,
        timings=timings,
        dry_run=dry_run,
    )
