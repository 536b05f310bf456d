"""Editable prompt templates.

Templates are plain text files using ``str.format`` placeholders (literal
braces must be doubled). Placeholders per template:

* ``describe``: ``{n_frames}``, ``{timestamps}``
* ``abstract``: ``{description}``
* ``query_scene``: ``{question}``
* ``answer``: ``{question}``, ``{options}``
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..errors import ConfigError

TEMPLATE_NAMES = ("describe", "abstract", "query_scene", "answer")
PLACEHOLDERS = {
    "describe": ("n_frames", "timestamps"),
    "abstract": ("description",),
    "query_scene": ("question",),
    "answer": ("question", "options"),
}


def _default_text(name: str) -> str:
    return resources.files("slfg.prompts").joinpath(f"{name}.txt").read_text()


@dataclass(frozen=True)
class PromptSet:
    describe: str
    abstract: str
    query_scene: str
    answer: str

    @classmethod
    def load(cls, overrides: Mapping[str, str | Path | None] | None = None) -> PromptSet:
        """Packaged defaults, with any template replaced by the file at ``overrides[name]``."""
        overrides = overrides or {}
        unknown = set(overrides) - set(TEMPLATE_NAMES)
        if unknown:
            raise ConfigError(f"unknown prompt template(s): {sorted(unknown)}")
        texts = {}
        for name in TEMPLATE_NAMES:
            path = overrides.get(name)
            if path is None:
                texts[name] = _default_text(name)
                continue
            try:
                texts[name] = Path(path).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read {name} prompt template {path}: {exc}") from exc
        prompts = cls(**texts)
        prompts.validate()
        return prompts

    def validate(self) -> None:
        for name, fields in PLACEHOLDERS.items():
            try:
                getattr(self, name).format(**{f: "" for f in fields})
            except (KeyError, IndexError, ValueError) as exc:
                raise ConfigError(f"{name} template has a bad placeholder: {exc}") from exc

    def render_describe(self, timestamps_s: list[float]) -> str:
        stamps = ", ".join(f"{t:g}" for t in timestamps_s)
        return self.describe.format(n_frames=len(timestamps_s), timestamps=stamps)

    def render_abstract(self, description: str) -> str:
        return self.abstract.format(description=description)

    def render_query_scene(self, question: str) -> str:
        return self.query_scene.format(question=question)

    def render_answer(self, question: str, options: Mapping[str, str]) -> str:
        lines = "\n".join(f"{letter}. {text}" for letter, text in options.items())
        return self.answer.format(question=question, options=lines)
