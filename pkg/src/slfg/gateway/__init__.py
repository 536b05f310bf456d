"""Uniform access to the four model capabilities, with call accounting.

:class:`ModelGateway` routes each capability (vision description, scene
abstraction, text embedding, answering) to a backend, checks the contract of
every call, and records it in a :class:`CallLedger`. Question scene
extraction is routed to the abstractor backend.
"""

from __future__ import annotations

import logging
import threading
import time
from contextlib import contextmanager
from typing import Iterator, Mapping, Protocol, Sequence

from ..errors import InvalidArgumentError, MalformedResponseError
from .ledger import CallLedger, CallRecord
from .mock import MockBackend
from .prompts import PromptSet
from .remote import ModelEndpointConfig, OpenAICompatibleClient, RemoteBackend

log = logging.getLogger(__name__)


class Backend(Protocol):
    model_name: str
    max_in_flight: int
    max_images: int

    def describe(self, image_refs: Sequence[str], prompt: str) -> str: ...
    def abstract(self, description: str, prompt: str) -> list[str]: ...
    def extract_query_scene(self, question: str, prompt: str) -> str: ...
    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...
    def answer(self, image_refs: Sequence[str], question: str,
               options: Mapping[str, str], prompt: str) -> str: ...


class ModelGateway:
    def __init__(
        self,
        describer: Backend,
        abstractor: Backend,
        embedder: Backend,
        answerer: Backend,
        prompts: PromptSet | None = None,
        ledger: CallLedger | None = None,
    ) -> None:
        self.describer = describer
        self.abstractor = abstractor
        self.embedder = embedder
        self.answerer = answerer
        self.prompts = prompts or PromptSet.load()
        self.ledger = ledger if ledger is not None else CallLedger()
        self._dim: int | None = None
        self._dim_lock = threading.Lock()

    @classmethod
    def mock(cls, prompts: PromptSet | None = None, ledger: CallLedger | None = None,
             names: Mapping[str, str] | None = None) -> ModelGateway:
        names = dict(names or {})
        return cls(
            describer=MockBackend(names.get("describer", "mock-describer")),
            abstractor=MockBackend(names.get("abstractor", "mock-abstractor")),
            embedder=MockBackend(names.get("embedder", "mock-embedder")),
            answerer=MockBackend(names.get("answerer", "mock-answerer")),
            prompts=prompts,
            ledger=ledger,
        )

    @property
    def describer_id(self) -> str:
        return self.describer.model_name

    @property
    def abstractor_id(self) -> str:
        return self.abstractor.model_name

    @property
    def embedder_id(self) -> str:
        return self.embedder.model_name

    @property
    def max_in_flight(self) -> int:
        return self.describer.max_in_flight

    @contextmanager
    def _timed(self, kind: str, video_id: str | None, phase: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.ledger.record(kind, video_id, phase, time.perf_counter() - start)

    def describe_frames(self, image_refs: Sequence[str], prompt: str, *, video_id: str | None = None) -> str:
        if not image_refs:
            raise InvalidArgumentError("describe_frames needs at least one frame")
        if len(image_refs) > self.describer.max_images:
            raise InvalidArgumentError(
                f"{len(image_refs)} frames exceed the describer limit of {self.describer.max_images}"
            )
        if not prompt.strip():
            raise InvalidArgumentError("describe_frames needs a non-empty prompt")
        with self._timed("describe", video_id, "index"):
            text = self.describer.describe(list(image_refs), prompt)
        if not text or not text.strip():
            raise MalformedResponseError(f"{self.describer_id} returned an empty description")
        return text.strip()

    def abstract_scenes(self, description: str, prompt: str, *, video_id: str | None = None) -> list[str]:
        if not description.strip():
            raise InvalidArgumentError("abstract_scenes needs a non-empty description")
        with self._timed("abstract", video_id, "index"):
            scenes = self.abstractor.abstract(description, prompt)
        scenes = [s.strip() for s in scenes if s and s.strip()]
        if not scenes:
            log.warning("no parsable scenes from %s; using the whole description", self.abstractor_id)
            scenes = [description.strip()]
        return scenes

    def extract_query_scene(self, question: str, prompt: str, *, video_id: str | None = None) -> str:
        if not question.strip():
            raise InvalidArgumentError("question must be non-empty")
        with self._timed("extract", video_id, "question"):
            text = self.abstractor.extract_query_scene(question, prompt)
        return (text or "").strip()

    def embed(self, texts: Sequence[str], *, video_id: str | None = None, phase: str = "index") -> list[list[float]]:
        texts = list(texts)
        if not texts:
            return []
        if any(not t or not t.strip() for t in texts):
            raise InvalidArgumentError("embed inputs must be non-empty strings")
        with self._timed("embed", video_id, phase):
            vectors = self.embedder.embed(texts)
        if len(vectors) != len(texts):
            raise MalformedResponseError(f"got {len(vectors)} embeddings for {len(texts)} texts")
        dims = {len(v) for v in vectors}
        if len(dims) != 1 or 0 in dims:
            raise MalformedResponseError(f"inconsistent embedding dimensions in one batch: {sorted(dims)}")
        dim = dims.pop()
        with self._dim_lock:
            if self._dim is None:
                self._dim = dim
            elif self._dim != dim:
                raise MalformedResponseError(f"embedding dimension changed from {self._dim} to {dim}")
        return vectors

    def answer(self, image_refs: Sequence[str], question: str, options: Mapping[str, str],
               *, video_id: str | None = None) -> str:
        if not image_refs:
            raise InvalidArgumentError("answer needs at least one frame")
        if not 2 <= len(options) <= 6:
            raise InvalidArgumentError(f"answer needs 2-6 options, got {len(options)}")
        prompt = self.prompts.render_answer(question, options)
        with self._timed("answer", video_id, "question"):
            return self.answerer.answer(list(image_refs), question, dict(options), prompt)


__all__ = [
    "Backend",
    "CallLedger",
    "CallRecord",
    "MockBackend",
    "ModelEndpointConfig",
    "ModelGateway",
    "OpenAICompatibleClient",
    "PromptSet",
    "RemoteBackend",
]
