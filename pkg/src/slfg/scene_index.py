"""The per-video scene index artifact and its JSON form."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import InvalidStateError
from .sampling import Frame, FrameGroup, SamplingConfig

Embedding = tuple[float, ...]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class IndexKey:
    """Cache identity of an index; any differing field means a different index."""

    video_id: str
    interval_ms: int
    group_size: int
    describer_id: str
    abstractor_id: str
    embedder_id: str
    origin_ms: int = 0

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class GroupDescription:
    group_index: int
    text: str


@dataclass(frozen=True)
class SceneSummary:
    group_index: int
    scene_index: int
    text: str
    embedding: Embedding | None = None


@dataclass(frozen=True)
class SceneIndex:
    video_id: str
    sampling: SamplingConfig
    group_size: int
    duration_s: float
    describer_id: str
    abstractor_id: str
    embedder_id: str
    groups: tuple[FrameGroup, ...]
    descriptions: tuple[GroupDescription, ...]
    scenes: tuple[SceneSummary, ...]
    created_at: str = ""
    _by_group: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    @property
    def key(self) -> IndexKey:
        return IndexKey(
            video_id=self.video_id,
            interval_ms=self.sampling.interval_ms,
            group_size=self.group_size,
            describer_id=self.describer_id,
            abstractor_id=self.abstractor_id,
            embedder_id=self.embedder_id,
            origin_ms=self.sampling.origin_ms,
        )

    @property
    def frames(self) -> list[Frame]:
        return [f for g in self.groups for f in g.frames]

    @property
    def is_embedded(self) -> bool:
        return bool(self.scenes) and all(s.embedding is not None for s in self.scenes)

    def scenes_by_group(self) -> dict[int, list[SceneSummary]]:
        if self._by_group is None:
            by_group: dict[int, list[SceneSummary]] = {g.group_index: [] for g in self.groups}
            for s in self.scenes:
                by_group.setdefault(s.group_index, []).append(s)
            object.__setattr__(self, "_by_group", by_group)
        return self._by_group

    def validate(self) -> None:
        group_ids = [g.group_index for g in self.groups]
        if group_ids != list(range(len(self.groups))):
            raise InvalidStateError("group indices must be 0..K-1 in order")
        if [d.group_index for d in self.descriptions] != group_ids:
            raise InvalidStateError("expected exactly one description per group")
        if any(not d.text.strip() for d in self.descriptions):
            raise InvalidStateError("empty group description")
        known = set(group_ids)
        seen = set()
        for s in self.scenes:
            if s.group_index not in known:
                raise InvalidStateError(f"scene references unknown group {s.group_index}")
            pair = (s.group_index, s.scene_index)
            if pair in seen:
                raise InvalidStateError(f"duplicate scene id {pair}")
            seen.add(pair)
            if not s.text.strip():
                raise InvalidStateError(f"empty scene text at {pair}")
        covered = {g for g, _ in seen}
        if covered != known:
            raise InvalidStateError(f"groups without scenes: {sorted(known - covered)}")
        embedded = [s.embedding for s in self.scenes if s.embedding is not None]
        if embedded:
            if len(embedded) != len(self.scenes):
                raise InvalidStateError("either all scenes carry embeddings or none do")
            if len({len(e) for e in embedded}) != 1:
                raise InvalidStateError("scene embeddings have mixed dimensions")

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "key": asdict(self.key),
            "video_id": self.video_id,
            "sampling": {"interval_s": self.sampling.interval_s, "origin_s": self.sampling.origin_s},
            "group_size": self.group_size,
            "duration_s": self.duration_s,
            "describer_id": self.describer_id,
            "abstractor_id": self.abstractor_id,
            "embedder_id": self.embedder_id,
            "created_at": self.created_at,
            "groups": [
                {
                    "group_index": g.group_index,
                    "frames": [
                        {"index": f.index, "t_ms": f.timestamp_ms, "image_ref": f.image_ref}
                        for f in g.frames
                    ],
                }
                for g in self.groups
            ],
            "descriptions": [
                {"group_index": d.group_index, "text": d.text} for d in self.descriptions
            ],
            "scenes": [
                {
                    "group_index": s.group_index,
                    "scene_index": s.scene_index,
                    "text": s.text,
                    "embedding": list(s.embedding) if s.embedding is not None else None,
                }
                for s in self.scenes
            ],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> SceneIndex:
        """Inverse of :meth:`to_json`; raises ``KeyError``/``TypeError``/``ValueError`` on bad input."""
        index = cls(
            video_id=data["video_id"],
            sampling=SamplingConfig(**data["sampling"]),
            group_size=int(data["group_size"]),
            duration_s=float(data["duration_s"]),
            describer_id=data["describer_id"],
            abstractor_id=data["abstractor_id"],
            embedder_id=data["embedder_id"],
            created_at=data.get("created_at", ""),
            groups=tuple(
                FrameGroup(
                    group_index=int(g["group_index"]),
                    frames=tuple(
                        Frame(index=int(f["index"]), timestamp_ms=int(f["t_ms"]), image_ref=f["image_ref"])
                        for f in g["frames"]
                    ),
                )
                for g in data["groups"]
            ),
            descriptions=tuple(
                GroupDescription(int(d["group_index"]), d["text"]) for d in data["descriptions"]
            ),
            scenes=tuple(
                SceneSummary(
                    group_index=int(s["group_index"]),
                    scene_index=int(s["scene_index"]),
                    text=s["text"],
                    embedding=tuple(float(x) for x in s["embedding"]) if s.get("embedding") is not None else None,
                )
                for s in data["scenes"]
            ),
        )
        index.validate()
        return index
