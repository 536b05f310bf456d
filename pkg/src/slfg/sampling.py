"""Dense timestamp sampling and fixed-granularity frame grouping.

All arithmetic is done on integer milliseconds so that spacing and window
tiling checks are exact. Public helpers accept and return seconds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidArgumentError


def to_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


@dataclass(frozen=True)
class SamplingConfig:
    interval_s: float = 10.0
    origin_s: float = 0.0

    def __post_init__(self) -> None:
        if not self.interval_s > 0:
            raise InvalidArgumentError(f"interval_s must be > 0, got {self.interval_s}")
        if self.origin_s < 0:
            raise InvalidArgumentError(f"origin_s must be >= 0, got {self.origin_s}")
        if self.interval_ms < 1:
            raise InvalidArgumentError("interval_s must be at least one millisecond")

    @property
    def interval_ms(self) -> int:
        return to_ms(self.interval_s)

    @property
    def origin_ms(self) -> int:
        return to_ms(self.origin_s)


@dataclass(frozen=True)
class Frame:
    index: int
    timestamp_ms: int
    image_ref: str

    @property
    def timestamp_s(self) -> float:
        return self.timestamp_ms / 1000


@dataclass(frozen=True)
class FrameGroup:
    """A run of consecutive sampled frames, the unit that gets described."""

    group_index: int
    frames: tuple[Frame, ...]

    @property
    def start_ms(self) -> int:
        return self.frames[0].timestamp_ms

    def end_ms(self, interval_ms: int) -> int:
        return self.start_ms + len(self.frames) * interval_ms

    def __len__(self) -> int:
        return len(self.frames)


def sample_timestamps_ms(duration_s: float, config: SamplingConfig) -> list[int]:
    """Timestamps ``t0 + i*dt`` (ms) for every ``i >= 0`` with ``t <= duration``.

    The interval is closed: a sample landing exactly on the duration is kept.
    """
    if not duration_s > 0:
        raise InvalidArgumentError(f"duration_s must be > 0, got {duration_s}")
    duration_ms = to_ms(duration_s)
    t0, dt = config.origin_ms, config.interval_ms
    if t0 > duration_ms:
        return []
    return list(range(t0, duration_ms + 1, dt))


def sample_timestamps(duration_s: float, config: SamplingConfig) -> list[float]:
    return [t / 1000 for t in sample_timestamps_ms(duration_s, config)]


def frame_count(duration_s: float, config: SamplingConfig) -> int:
    """Closed-form size of :func:`sample_timestamps_ms`."""
    duration_ms = to_ms(duration_s)
    if config.origin_ms > duration_ms:
        return 0
    return (duration_ms - config.origin_ms) // config.interval_ms + 1


def group_frames(frames: Sequence[Frame], group_size: int) -> list[FrameGroup]:
    """Chunk ``frames`` into groups of ``group_size``; the last group may be short."""
    if not frames:
        raise InvalidArgumentError("cannot group an empty frame list")
    if group_size < 1:
        raise InvalidArgumentError(f"group_size must be >= 1, got {group_size}")
    return [
        FrameGroup(group_index=k, frames=tuple(frames[start:start + group_size]))
        for k, start in enumerate(range(0, len(frames), group_size))
    ]


def group_window(group: FrameGroup, config: SamplingConfig) -> tuple[float, float]:
    """Return ``(start_s, end_s)`` where ``end_s = start_s + len(group) * dt``."""
    if not group.frames:
        raise InvalidArgumentError("group has no frames")
    return group.start_ms / 1000, group.end_ms(config.interval_ms) / 1000
