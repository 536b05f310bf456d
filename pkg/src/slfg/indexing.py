"""Build a scene index for one video: sample, group, describe, abstract, embed."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from .errors import InvalidArgumentError
from .frames import FrameDirectory
from .gateway import ModelGateway
from .sampling import FrameGroup, SamplingConfig, group_frames
from .scene_index import GroupDescription, IndexKey, SceneIndex, SceneSummary
from .store import IndexStore

log = logging.getLogger(__name__)

EMBED_BATCH_SIZE = 128


def index_key(video_id: str, sampling: SamplingConfig, group_size: int, gateway: ModelGateway) -> IndexKey:
    return IndexKey(
        video_id=video_id,
        interval_ms=sampling.interval_ms,
        group_size=group_size,
        describer_id=gateway.describer_id,
        abstractor_id=gateway.abstractor_id,
        embedder_id=gateway.embedder_id,
        origin_ms=sampling.origin_ms,
    )


def describe_group(group: FrameGroup, gateway: ModelGateway, video_id: str | None = None) -> GroupDescription:
    prompt = gateway.prompts.render_describe([f.timestamp_s for f in group.frames])
    text = gateway.describe_frames([f.image_ref for f in group.frames], prompt, video_id=video_id)
    return GroupDescription(group_index=group.group_index, text=text)


def generate_scenes(
    description: GroupDescription, gateway: ModelGateway, video_id: str | None = None
) -> list[SceneSummary]:
    prompt = gateway.prompts.render_abstract(description.text)
    texts = gateway.abstract_scenes(description.text, prompt, video_id=video_id)
    return [
        SceneSummary(group_index=description.group_index, scene_index=m, text=t)
        for m, t in enumerate(texts)
    ]


def embed_scenes(
    scenes: list[SceneSummary], gateway: ModelGateway, video_id: str | None = None,
    batch_size: int = EMBED_BATCH_SIZE,
) -> list[SceneSummary]:
    out: list[SceneSummary] = []
    for start in range(0, len(scenes), batch_size):
        batch = scenes[start:start + batch_size]
        vectors = gateway.embed([s.text for s in batch], video_id=video_id, phase="index")
        out.extend(
            SceneSummary(s.group_index, s.scene_index, s.text, tuple(float(x) for x in v))
            for s, v in zip(batch, vectors)
        )
    return out


def build_index(
    frame_source: FrameDirectory | Path | str,
    sampling: SamplingConfig,
    group_size: int,
    gateway: ModelGateway,
    store: IndexStore | None = None,
    *,
    created_at: str | None = None,
    embed_batch_size: int = EMBED_BATCH_SIZE,
) -> SceneIndex:
    """Return the stored index for this configuration, or build and store a new one.

    Group descriptions and scene abstractions are requested concurrently, up
    to the gateway's in-flight bound. Any backend failure aborts the build and
    nothing is stored.
    """
    if group_size < 1:
        raise InvalidArgumentError(f"group_size must be >= 1, got {group_size}")
    source = frame_source if isinstance(frame_source, FrameDirectory) else FrameDirectory(frame_source)
    video_id = source.video_id
    key = index_key(video_id, sampling, group_size, gateway)
    if store is not None:
        cached = store.load(key)
        if cached is not None:
            log.info("index hit for %s (%s)", video_id, key.digest())
            return cached

    frames = source.frames(sampling)
    if not frames:
        raise InvalidArgumentError(f"{video_id}: sampling yields no frames")
    groups = group_frames(frames, group_size)
    log.info("indexing %s: %d frames in %d groups", video_id, len(frames), len(groups))

    def process(group: FrameGroup) -> tuple[GroupDescription, list[SceneSummary]]:
        description = describe_group(group, gateway, video_id)
        return description, generate_scenes(description, gateway, video_id)

    workers = max(1, min(gateway.max_in_flight, len(groups)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(process, groups))

    descriptions = tuple(d for d, _ in results)
    scenes = embed_scenes([s for _, ss in results for s in ss], gateway, video_id, embed_batch_size)
    index = SceneIndex(
        video_id=video_id,
        sampling=sampling,
        group_size=group_size,
        duration_s=source.duration_s,
        describer_id=gateway.describer_id,
        abstractor_id=gateway.abstractor_id,
        embedder_id=gateway.embedder_id,
        groups=tuple(groups),
        descriptions=descriptions,
        scenes=tuple(scenes),
        created_at=created_at if created_at is not None else datetime.now(timezone.utc).isoformat(),
    )
    index.validate()
    if store is not None:
        store.save(index)
    return index
