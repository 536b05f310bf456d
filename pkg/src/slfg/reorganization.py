"""Turn ranked group scores into the frame set sent to the answering model.

Steps: keep or discard groups by walking the ranked scores, hand the unused
frame budget out evenly among the kept groups, widen each kept group's time
window by its share (half before, half after), and merge everything into a
single time-ordered frame list that never exceeds the budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidArgumentError
from .localization import GroupScore
from .sampling import Frame, FrameGroup, to_ms
from .scene_index import SceneIndex

STRATEGIES = ("top1", "topn", "dynamic")
THRESHOLD_MODES = ("relative", "absolute")

# Gaps within this distance of the threshold count as reaching it, so that
# rescaling scores cannot flip a decision through floating-point rounding.
GAP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SelectionConfig:
    threshold: float = 0.10
    max_frames: int = 64
    strategy: str = "dynamic"
    topn_n: int = 2
    threshold_mode: str = "relative"

    def __post_init__(self) -> None:
        if not 0 < self.threshold < 1:
            raise InvalidArgumentError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.max_frames < 1:
            raise InvalidArgumentError(f"max_frames must be >= 1, got {self.max_frames}")
        if self.strategy not in STRATEGIES:
            raise InvalidArgumentError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.topn_n < 1:
            raise InvalidArgumentError(f"topn_n must be >= 1, got {self.topn_n}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise InvalidArgumentError(f"threshold_mode must be one of {THRESHOLD_MODES}")


def score_gap(higher: float, lower: float, mode: str = "relative") -> float:
    if mode == "absolute":
        return higher - lower
    if higher == lower:
        return 0.0
    return (higher - lower) / higher


def select_groups(sorted_scores: Sequence[GroupScore], config: SelectionConfig) -> list[int]:
    """Indices of the kept groups, in time order.

    ``dynamic`` walks consecutive ranked pairs and stops at the first pair
    whose gap reaches the threshold, discarding the lower member and
    everything ranked below it. The top group is always kept.
    """
    if not sorted_scores:
        raise InvalidArgumentError("no group scores to select from")
    values = [s.score for s in sorted_scores]
    if any(b > a for a, b in zip(values, values[1:])):
        raise InvalidArgumentError("scores must be sorted in descending order")

    if config.strategy == "top1":
        kept = sorted_scores[:1]
    elif config.strategy == "topn":
        kept = sorted_scores[:config.topn_n]
    else:
        count = 1
        for hi, lo in zip(values, values[1:]):
            if score_gap(hi, lo, config.threshold_mode) >= config.threshold - GAP_TOLERANCE:
                break
            count += 1
        kept = sorted_scores[:count]
    return sorted(s.group_index for s in kept)


@dataclass(frozen=True)
class BudgetAllocation:
    extensions: tuple[int, ...]
    over_budget: bool


def allocate_budget(
    selected: Sequence[tuple[int, int, float]], max_frames: int, interval_s: float
) -> BudgetAllocation:
    """Split ``max_frames - sum(F_i)`` evenly over ``(group_index, F_i, start_s)`` entries.

    Each group gets ``R // n`` extra frames; the ``R % n`` leftovers go one
    each to the groups with the longest time span, earlier start first on
    ties. When the base frames alone exceed the budget nothing is added and
    ``over_budget`` is set.
    """
    if not selected:
        raise InvalidArgumentError("allocate_budget needs at least one selected group")
    n = len(selected)
    total = sum(f for _, f, _ in selected)
    if total > max_frames:
        return BudgetAllocation(extensions=(0,) * n, over_budget=True)
    remaining = max_frames - total
    base, leftover = divmod(remaining, n)
    dt_ms = to_ms(interval_s)
    order = sorted(range(n), key=lambda i: (-selected[i][1] * dt_ms, to_ms(selected[i][2])))
    extensions = [base] * n
    for i in order[:leftover]:
        extensions[i] += 1
    return BudgetAllocation(extensions=tuple(extensions), over_budget=False)


@dataclass(frozen=True)
class Extension:
    before: tuple[int, ...]  # ms, walking outward from the window start
    after: tuple[int, ...]   # ms, walking outward from the window end

    @property
    def timestamps(self) -> list[int]:
        return sorted(self.before + self.after)


def _walk(start: int, step: int, lo: int, hi: int, occupied: set[int], limit: int) -> list[int]:
    out: list[int] = []
    t = start
    while lo <= t <= hi and len(out) < limit:
        if t not in occupied:
            out.append(t)
        t += step
    return out


def extend_group(
    group: FrameGroup,
    delta: int,
    interval_s: float,
    duration_s: float,
    occupied: set[int] | frozenset[int] = frozenset(),
    origin_s: float = 0.0,
) -> Extension:
    """Grid timestamps just outside ``group``'s window: ``ceil(delta/2)`` before, the rest after.

    Candidates are clipped to ``[origin_s, duration_s]`` and skip anything in
    ``occupied`` (ms). A side that runs out hands its shortfall to the other
    side; whatever neither side can supply is dropped.
    """
    if delta < 0:
        raise InvalidArgumentError(f"extension size must be >= 0, got {delta}")
    if delta == 0:
        return Extension((), ())
    dt = to_ms(interval_s)
    lo, hi = to_ms(origin_s), to_ms(duration_s)
    occupied = set(occupied)
    before_pool = _walk(group.start_ms - dt, -dt, lo, hi, occupied, delta)
    after_pool = _walk(group.end_ms(dt), dt, lo, hi, occupied, delta)
    n_before = min(-(-delta // 2), len(before_pool))
    n_after = min(delta - n_before, len(after_pool))
    n_before = min(delta - n_after, len(before_pool))
    return Extension(tuple(before_pool[:n_before]), tuple(after_pool[:n_after]))


def uniform_subsample(items: Sequence, k: int) -> list:
    """``k`` order-preserving picks at evenly spaced positions ``i * len // k``."""
    n = len(items)
    if k >= n:
        return list(items)
    return [items[i * n // k] for i in range(k)]


def assemble_frames(
    groups: Sequence[FrameGroup], extension_frames: Sequence[Sequence[Frame]], max_frames: int
) -> tuple[list[Frame], bool]:
    """Merge base and extension frames by timestamp; returns ``(frames, subsampled)``."""
    merged: dict[int, Frame] = {}
    for g in groups:
        for f in g.frames:
            merged.setdefault(f.timestamp_ms, f)
    for ext in extension_frames:
        for f in ext:
            merged.setdefault(f.timestamp_ms, f)
    ordered = [merged[t] for t in sorted(merged)]
    if len(ordered) > max_frames:
        return uniform_subsample(ordered, max_frames), True
    return ordered, False


@dataclass(frozen=True)
class SelectionPlan:
    selected: tuple[int, ...]
    base_frames_per_group: tuple[int, ...]
    extensions: tuple[int, ...]
    extension_timestamps: tuple[Extension, ...]
    final_frames: tuple[Frame, ...]
    over_budget: bool
    subsampled: bool

    @property
    def frame_timestamps_s(self) -> list[float]:
        return [f.timestamp_s for f in self.final_frames]


def build_plan(index: SceneIndex, sorted_scores: Sequence[GroupScore], config: SelectionConfig) -> SelectionPlan:
    selected = select_groups(sorted_scores, config)
    groups = [index.groups[k] for k in selected]
    interval_s = index.sampling.interval_s
    if config.strategy == "dynamic":
        alloc = allocate_budget(
            [(g.group_index, len(g), g.start_ms / 1000) for g in groups], config.max_frames, interval_s
        )
    else:
        alloc = BudgetAllocation(
            extensions=(0,) * len(groups), over_budget=sum(len(g) for g in groups) > config.max_frames
        )

    by_ts = {f.timestamp_ms: f for f in index.frames}
    occupied = {f.timestamp_ms for g in groups for f in g.frames}
    extensions: list[Extension] = []
    extension_frames: list[list[Frame]] = []
    for g, delta in zip(groups, alloc.extensions):
        ext = extend_group(g, delta, interval_s, index.duration_s, occupied, index.sampling.origin_s)
        resolved = [by_ts[t] for t in ext.timestamps if t in by_ts]
        occupied.update(ext.timestamps)
        extensions.append(ext)
        extension_frames.append(resolved)

    final, subsampled = assemble_frames(groups, extension_frames, config.max_frames)
    return SelectionPlan(
        selected=tuple(selected),
        base_frames_per_group=tuple(len(g) for g in groups),
        extensions=alloc.extensions,
        extension_timestamps=tuple(extensions),
        final_frames=tuple(final),
        over_budget=alloc.over_budget,
        subsampled=subsampled,
    )

