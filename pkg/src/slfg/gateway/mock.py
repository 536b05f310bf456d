"""Deterministic stand-ins for every model capability.

Every method is a pure function of its arguments plus the optional
``mock_plant.json`` stored next to the frames it is given. The plant file
holds canned group descriptions and answer cues::

    {
      "descriptions": [{"frames_ms": [0, 10000, ...], "text": "..."}],
      "cues": [{"question": "...", "frames_ms": [80000], "letter": "C"}]
    }

Rules:

* describe: exact lookup on the sorted frame timestamps; a fixed generic
  sentence when nothing is planted.
* abstract: one scene per ``<<scene>>`` sentinel (text up to the next
  sentinel); no sentinels gives the whole description as one scene.
* query scene: the clause between ``[[`` and ``]]``; otherwise the question.
* embed: L2-normalised 256-bin hashed bag of lowercase character trigrams.
* answer: the letter of the first cue whose question matches and whose frames
  are all present; ``"A"`` otherwise.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from pathlib import Path
from typing import Mapping, Sequence

PLANT_NAME = "mock_plant.json"
SCENE_SENTINEL = "<<scene>>"
EMBED_BINS = 256
FALLBACK_ANSWER = "A"

_QUERY_CLAUSE = re.compile(r"\[\[(.+?)\]\]", re.DOTALL)
_FRAME_NAME = re.compile(r"^frame_(\d+)\.jpg$")


def trigram_embedding(text: str, bins: int = EMBED_BINS) -> list[float]:
    s = text.lower()
    grams = [s[i:i + 3] for i in range(len(s) - 2)] or [s]
    vec = [0.0] * bins
    for g in grams:
        digest = hashlib.blake2b(g.encode("utf-8"), digest_size=8).digest()
        vec[int.from_bytes(digest, "big") % bins] += 1.0
    norm = math.sqrt(math.fsum(x * x for x in vec))
    return [x / norm for x in vec]


def split_scenes(description: str) -> list[str]:
    if SCENE_SENTINEL not in description:
        return [description.strip()]
    parts = description.split(SCENE_SENTINEL)[1:]
    return [p.strip() for p in parts if p.strip()]


def _locate(ref: str) -> tuple[str, int] | None:
    path = Path(ref)
    m = _FRAME_NAME.match(path.name)
    if m is None:
        return None
    return str(path.parent.resolve()), int(m.group(1))


class MockBackend:
    """Offline backend implementing describe/abstract/extract/embed/answer."""

    max_in_flight = 4
    max_images = 1024

    def __init__(self, model_name: str = "mock") -> None:
        self.model_name = model_name
        self._plants: dict[str, dict] = {}
        self._lock = threading.Lock()

    def _plant(self, directory: str) -> dict:
        with self._lock:
            if directory not in self._plants:
                path = Path(directory) / PLANT_NAME
                self._plants[directory] = json.loads(path.read_text()) if path.is_file() else {}
            return self._plants[directory]

    def describe(self, image_refs: Sequence[str], prompt: str) -> str:
        located = [_locate(r) for r in image_refs]
        if all(located) and len({d for d, _ in located}) == 1:
            directory = located[0][0]
            key = sorted(t for _, t in located)
            for entry in self._plant(directory).get("descriptions", []):
                if sorted(entry["frames_ms"]) == key:
                    return entry["text"]
        refs = sorted(Path(r).name for r in image_refs)
        return f"A static shot with no notable activity ({refs[0]} to {refs[-1]})."

    def abstract(self, description: str, prompt: str) -> list[str]:
        return split_scenes(description)

    def extract_query_scene(self, question: str, prompt: str) -> str:
        m = _QUERY_CLAUSE.search(question)
        return m.group(1).strip() if m else question

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [trigram_embedding(t) for t in texts]

    def answer(self, image_refs: Sequence[str], question: str, options: Mapping[str, str], prompt: str) -> str:
        present: dict[str, set[int]] = {}
        for ref in image_refs:
            loc = _locate(ref)
            if loc is not None:
                present.setdefault(loc[0], set()).add(loc[1])
        for directory in sorted(present):
            for cue in self._plant(directory).get("cues", []):
                if cue.get("question") not in (None, question):
                    continue
                if set(cue["frames_ms"]) <= present[directory]:
                    return cue["letter"]
        return FALLBACK_ANSWER
