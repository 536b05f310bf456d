"""Layered pipeline configuration.

Precedence, highest first: command-line flag, ``SLFG_*`` environment
variable, YAML config file, built-in default. Every layer is flattened to
dotted keys (``selection.max_frames``) before merging.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError, SLFGError
from .gateway import ModelEndpointConfig, ModelGateway, PromptSet, RemoteBackend
from .gateway.prompts import TEMPLATE_NAMES
from .inference import RunConfig
from .reorganization import SelectionConfig
from .sampling import SamplingConfig

ROLES = ("describer", "abstractor", "embedder", "answerer")

DEFAULT_BASE_URL = "http://localhost:8000/v1"
DEFAULT_MODELS = {
    "describer": "llava-video-7b",
    "abstractor": "Qwen2.5-7B-Instruct",
    "embedder": "BAAI/bge-m3",
    "answerer": "llava-video-7b",
}

DEFAULTS: dict[str, Any] = {
    "sampling.interval_s": 10.0,
    "sampling.origin_s": 0.0,
    "group_size": 16,
    "selection.strategy": "dynamic",
    "selection.threshold": 0.10,
    "selection.threshold_mode": "relative",
    "selection.max_frames": 64,
    "selection.topn_n": 2,
    "paths.index_root": ".slfg/index",
    "paths.frames_root": "frames",
    "mock": False,
    "jobs": 1,
}
for _role in ROLES:
    DEFAULTS.update({
        f"models.{_role}.base_url": DEFAULT_BASE_URL,
        f"models.{_role}.model_name": DEFAULT_MODELS[_role],
        f"models.{_role}.api_key_env": "SLFG_API_KEY",
        f"models.{_role}.timeout_s": 120.0,
        f"models.{_role}.max_retries": 3,
        f"models.{_role}.max_in_flight": 4,
        f"models.{_role}.max_images": 64,
    })
for _name in TEMPLATE_NAMES:
    DEFAULTS[f"prompts.{_name}"] = None

ENV_KEYS: dict[str, str] = {
    "SLFG_INTERVAL": "sampling.interval_s",
    "SLFG_ORIGIN": "sampling.origin_s",
    "SLFG_GROUP_SIZE": "group_size",
    "SLFG_STRATEGY": "selection.strategy",
    "SLFG_THRESHOLD": "selection.threshold",
    "SLFG_THRESHOLD_MODE": "selection.threshold_mode",
    "SLFG_MAX_FRAMES": "selection.max_frames",
    "SLFG_TOPN": "selection.topn_n",
    "SLFG_INDEX_ROOT": "paths.index_root",
    "SLFG_FRAMES_ROOT": "paths.frames_root",
    "SLFG_MOCK": "mock",
    "SLFG_JOBS": "jobs",
}
_ENDPOINT_ENV = {
    "BASE_URL": "base_url",
    "MODEL": "model_name",
    "API_KEY_ENV": "api_key_env",
    "TIMEOUT": "timeout_s",
    "MAX_RETRIES": "max_retries",
    "MAX_IN_FLIGHT": "max_in_flight",
    "MAX_IMAGES": "max_images",
}
for _role in ROLES:
    for _suffix, _field in _ENDPOINT_ENV.items():
        ENV_KEYS[f"SLFG_{_role.upper()}_{_suffix}"] = f"models.{_role}.{_field}"
for _name in TEMPLATE_NAMES:
    ENV_KEYS[f"SLFG_PROMPT_{_name.upper()}"] = f"prompts.{_name}"


def _flatten(tree: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, dotted + "."))
        else:
            flat[dotted] = value
    return flat


def _coerce(key: str, value: Any) -> Any:
    """Convert a string (env var) value to the type of the key's default."""
    default = DEFAULTS[key]
    if not isinstance(value, str) or isinstance(default, str) or default is None:
        return value
    if isinstance(default, bool):
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off", ""):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    try:
        return type(default)(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}") from exc


def read_config_file(path: Path | str) -> dict[str, Any]:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    flat = _flatten(data)
    unknown = sorted(set(flat) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{path}: unknown config key(s) {unknown}")
    return flat


def env_layer(env: Mapping[str, str]) -> dict[str, Any]:
    return {ENV_KEYS[k]: v for k, v in env.items() if k in ENV_KEYS}


def resolve_settings(
    overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
    config_path: Path | str | None = None,
) -> dict[str, Any]:
    """Merge all layers into one flat dict; ``None`` flag values mean "not given"."""
    merged = copy.deepcopy(DEFAULTS)
    env = os.environ if env is None else env
    if config_path is not None:
        merged.update(read_config_file(config_path))
    for key, value in env_layer(env).items():
        merged[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown setting {key!r}")
        if value is not None:
            merged[key] = _coerce(key, value)
    return merged


@dataclass
class PipelineConfig:
    run: RunConfig
    endpoints: dict[str, ModelEndpointConfig]
    prompt_paths: dict[str, str | None]
    index_root: Path
    frames_root: Path
    mock: bool = False
    jobs: int = 1
    settings: dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def from_settings(cls, s: Mapping[str, Any]) -> PipelineConfig:
        try:
            run = RunConfig(
                sampling=SamplingConfig(float(s["sampling.interval_s"]), float(s["sampling.origin_s"])),
                group_size=int(s["group_size"]),
                selection=SelectionConfig(
                    threshold=float(s["selection.threshold"]),
                    max_frames=int(s["selection.max_frames"]),
                    strategy=str(s["selection.strategy"]),
                    topn_n=int(s["selection.topn_n"]),
                    threshold_mode=str(s["selection.threshold_mode"]),
                ),
            )
            endpoints = {
                role: ModelEndpointConfig(
                    base_url=str(s[f"models.{role}.base_url"]),
                    model_name=str(s[f"models.{role}.model_name"]),
                    api_key_env=s[f"models.{role}.api_key_env"],
                    timeout_s=float(s[f"models.{role}.timeout_s"]),
                    max_retries=int(s[f"models.{role}.max_retries"]),
                    max_in_flight=int(s[f"models.{role}.max_in_flight"]),
                    max_images=int(s[f"models.{role}.max_images"]),
                )
                for role in ROLES
            }
            jobs = int(s["jobs"])
        except (SLFGError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return cls(
            run=run,
            endpoints=endpoints,
            prompt_paths={n: s[f"prompts.{n}"] for n in TEMPLATE_NAMES},
            index_root=Path(s["paths.index_root"]),
            frames_root=Path(s["paths.frames_root"]),
            mock=bool(s["mock"]),
            jobs=jobs,
            settings=dict(s),
        )

    @classmethod
    def load(
        cls,
        overrides: Mapping[str, Any] | None = None,
        env: Mapping[str, str] | None = None,
        config_path: Path | str | None = None,
    ) -> PipelineConfig:
        return cls.from_settings(resolve_settings(overrides, env, config_path))

    def check_paths(self, need_frames: bool = True) -> None:
        if need_frames and not self.frames_root.is_dir():
            raise ConfigError(f"frames root {self.frames_root} does not exist")
        for name, path in self.prompt_paths.items():
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{name} prompt template {path} does not exist")

    def build_gateway(self) -> ModelGateway:
        prompts = PromptSet.load(self.prompt_paths)
        if self.mock:
            names = {
                role: ("mock-" + role if self.settings.get(f"models.{role}.model_name") == DEFAULT_MODELS[role]
                       else f"mock:{self.endpoints[role].model_name}")
                for role in ROLES
            }
            return ModelGateway.mock(prompts=prompts, names=names)
        for role, ep in self.endpoints.items():
            if not ep.base_url:
                raise ConfigError(f"no base_url configured for the {role} model")
        return ModelGateway(
            describer=RemoteBackend(self.endpoints["describer"]),
            abstractor=RemoteBackend(self.endpoints["abstractor"]),
            embedder=RemoteBackend(self.endpoints["embedder"]),
            answerer=RemoteBackend(self.endpoints["answerer"]),
            prompts=prompts,
        )
