"""Rank frame groups by how well their scenes match the question's scene.

A group's raw score is the best cosine similarity between the query scene
embedding and any of the group's scene embeddings. Raw cosines are mapped
affinely from [-1, 1] to [0, 1] so that the relative-gap selection rule
downstream is defined for every input.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, InvalidStateError
from .gateway import ModelGateway
from .scene_index import Embedding, SceneIndex, SceneSummary

log = logging.getLogger(__name__)

# Similarities are compared, and scores reported, at this many decimals. Scenes
# with the same content but different rounding noise from normalisation then
# tie exactly and fall back to the index tie-break instead of ranking by noise.
SCORE_DECIMALS = 12


@dataclass(frozen=True)
class QueryScene:
    question: str
    text: str
    embedding: Embedding


@dataclass(frozen=True)
class GroupScore:
    group_index: int
    score: float
    raw_cosine: float
    best_scene_index: int


def normalize(raw_cosine: float) -> float:
    return (raw_cosine + 1.0) / 2.0


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0 or not (math.isfinite(na) and math.isfinite(nb)):
        raise InvalidArgumentError("cosine is undefined for zero or non-finite vectors")
    value = float(np.dot(a, b)) / (na * nb)
    return min(1.0, max(-1.0, value))


def extract_query_scene(question: str, gateway: ModelGateway, video_id: str | None = None) -> QueryScene:
    if not question or not question.strip():
        raise InvalidArgumentError("question must be non-empty")
    prompt = gateway.prompts.render_query_scene(question)
    text = gateway.extract_query_scene(question, prompt, video_id=video_id)
    if not text:
        log.warning("empty query-scene extraction; embedding the raw question instead")
        text = question.strip()
    [vector] = gateway.embed([text], video_id=video_id, phase="question")
    return QueryScene(question=question, text=text, embedding=tuple(float(x) for x in vector))


def score_group(scenes: Sequence[SceneSummary], query: QueryScene) -> GroupScore:
    """Max cosine over the group's scenes; ties (at ``SCORE_DECIMALS``) go to the lowest scene_index."""
    if not scenes:
        raise InvalidArgumentError("cannot score a group with no scenes")
    best: tuple[float, int, float] | None = None
    group_index = scenes[0].group_index
    for scene in scenes:
        if scene.embedding is None:
            raise InvalidStateError(
                f"scene ({scene.group_index}, {scene.scene_index}) has no embedding"
            )
        sim = cosine(scene.embedding, query.embedding)
        key = round(sim, SCORE_DECIMALS)
        if best is None or key > best[0] or (key == best[0] and scene.scene_index < best[1]):
            best = (key, scene.scene_index, sim)
    key, idx, raw = best
    return GroupScore(group_index=group_index, score=round(normalize(key), SCORE_DECIMALS),
                      raw_cosine=raw, best_scene_index=idx)


def score_all(index: SceneIndex, query: QueryScene) -> list[GroupScore]:
    """One score per group, best first; equal scores keep the earlier group first."""
    by_group = index.scenes_by_group()
    scores = [score_group(by_group[g.group_index], query) for g in index.groups]
    return sorted(scores, key=lambda s: (-s.score, s.group_index))
