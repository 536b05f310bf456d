"""HTTP backends speaking the chat-completions and embeddings JSON protocols."""

from __future__ import annotations

import base64
import logging
import mimetypes
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import httpx

from ..errors import BackendUnavailableError, InvalidArgumentError, MalformedResponseError

log = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


@dataclass(frozen=True)
class ModelEndpointConfig:
    base_url: str
    model_name: str
    api_key_env: str | None = None
    timeout_s: float = 120.0
    max_retries: int = 3
    max_in_flight: int = 4
    max_images: int = 64
    max_tokens: int = 1024
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.timeout_s > 0:
            raise InvalidArgumentError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise InvalidArgumentError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise InvalidArgumentError("max_in_flight must be >= 1")
        if self.max_images < 1:
            raise InvalidArgumentError("max_images must be >= 1")


class OpenAICompatibleClient:
    """Blocking client with bounded concurrency and exponential-backoff retries.

    At most ``config.max_in_flight`` requests are outstanding at any time, no
    matter how many threads share the client.
    """

    def __init__(
        self,
        config: ModelEndpointConfig,
        transport: httpx.BaseTransport | None = None,
        backoff_s: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self.backoff_s = backoff_s
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        headers = {"Content-Type": "application/json"}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout_s,
            transport=transport,
        )

    def close(self) -> None:
        self._http.close()

    def post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        attempts = self.config.max_retries + 1
        last_error = "no attempt made"
        for attempt in range(attempts):
            try:
                with self._slots:
                    resp = self._http.post(path, json=payload)
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code < 400:
                    try:
                        return resp.json()
                    except ValueError as exc:
                        raise MalformedResponseError(f"{path}: response is not JSON") from exc
                last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                if resp.status_code not in RETRYABLE_STATUS:
                    break
            log.warning("%s%s attempt %d/%d failed: %s",
                        self.config.base_url, path, attempt + 1, attempts, last_error)
            if attempt < attempts - 1:
                self._sleep(self.backoff_s * 2 ** attempt)
        raise BackendUnavailableError(
            f"{self.config.model_name} at {self.config.base_url}{path}: {last_error}"
        )

    def chat(self, content: str | list[dict[str, Any]]) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": content}],
            "max_tokens": self.config.max_tokens,
            "temperature": self.config.temperature,
        }
        data = self.post("/chat/completions", payload)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"chat response missing choices[0].message.content: {data!r:.200}") from exc
        if isinstance(text, list):  # some servers return content parts
            text = "".join(p.get("text", "") for p in text if isinstance(p, dict))
        if not isinstance(text, str):
            raise MalformedResponseError(f"chat content is not text: {text!r:.200}")
        return text

    def embeddings(self, texts: Sequence[str]) -> list[list[float]]:
        data = self.post("/embeddings", {"model": self.config.model_name, "input": list(texts)})
        try:
            items = sorted(data["data"], key=lambda d: d.get("index", 0))
            vectors = [[float(x) for x in item["embedding"]] for item in items]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"embeddings response malformed: {data!r:.200}") from exc
        if len(vectors) != len(texts):
            raise MalformedResponseError(
                f"embeddings response has {len(vectors)} vectors for {len(texts)} inputs"
            )
        return vectors


def image_part(ref: str) -> dict[str, Any]:
    """Encode a frame file as an inline data-URL image part; URLs pass through."""
    if ref.startswith(("http://", "https://", "data:")):
        url = ref
    else:
        mime = mimetypes.guess_type(ref)[0] or "image/jpeg"
        b64 = base64.b64encode(Path(ref).read_bytes()).decode("ascii")
        url = f"data:{mime};base64,{b64}"
    return {"type": "image_url", "image_url": {"url": url}}


def vision_content(image_refs: Sequence[str], text: str) -> list[dict[str, Any]]:
    return [image_part(r) for r in image_refs] + [{"type": "text", "text": text}]


_LIST_ITEM = re.compile(r"^\s*(?:\d+\s*[.):]|[-*•]|scene\s*\d+\s*[:.)-])\s*(.+?)\s*$", re.IGNORECASE)


def parse_scene_list(text: str) -> list[str]:
    """Pull items out of a numbered or bulleted list reply; ``[]`` if it has none."""
    items = []
    for line in text.splitlines():
        m = _LIST_ITEM.match(line)
        if m:
            item = m.group(1).strip().strip("*").strip()
            if item:
                items.append(item)
    return items


class RemoteBackend:
    """One model endpoint; any of the four capabilities can be routed to it."""

    def __init__(self, config: ModelEndpointConfig, client: OpenAICompatibleClient | None = None) -> None:
        self.config = config
        self.client = client or OpenAICompatibleClient(config)

    @property
    def model_name(self) -> str:
        return self.config.model_name

    @property
    def max_in_flight(self) -> int:
        return self.config.max_in_flight

    @property
    def max_images(self) -> int:
        return self.config.max_images

    def describe(self, image_refs: Sequence[str], prompt: str) -> str:
        return self.client.chat(vision_content(image_refs, prompt)).strip()

    def abstract(self, description: str, prompt: str) -> list[str]:
        return parse_scene_list(self.client.chat(prompt))

    def extract_query_scene(self, question: str, prompt: str) -> str:
        return self.client.chat(prompt).strip()

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return self.client.embeddings(texts)

    def answer(self, image_refs: Sequence[str], question: str, options: Mapping[str, str], prompt: str) -> str:
        return self.client.chat(vision_content(image_refs, prompt))
