"""Layered runtime configuration.

Values resolve with documented precedence: environment variables override the
config file, the config file overrides built-in defaults. The file is JSON;
environment variables are flat `THEOREMSEARCH_*` names (nested provider
settings use `THEOREMSEARCH_EMBEDDING_*` / `THEOREMSEARCH_AUGMENTATION_*`).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

from .embedding import DEFAULT_PRESET, MockEmbeddingProvider, PRESETS
from .mocks import MockTextGenerationProvider
from .providers import (
    EmbeddingProvider,
    HttpEmbeddingProvider,
    HttpTextGenerationProvider,
    TextGenerationProvider,
)

ENV_PREFIX = "THEOREMSEARCH_"

PROVIDER_KINDS = ("mock", "http", "none")


@dataclass(frozen=True)
class ProviderSettings:
    kind: str = "mock"
    endpoint: str = ""
    model: str = ""
    api_key: str | None = None
    timeout: float = 10.0
    dim: int = 64

    def validate(self, role: str) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"{role} provider kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.kind == "http" and (not self.endpoint or not self.model):
            raise ValueError(f"{role} provider kind 'http' needs endpoint and model")
        if self.timeout <= 0:
            raise ValueError(f"{role} provider timeout must be positive")
        if self.dim < 1:
            raise ValueError(f"{role} provider dim must be >= 1")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    index_path: str = "artifacts/index.hnsw"
    corpus_path: str = "artifacts/corpus.jsonl"
    pairs_path: str = "artifacts/pairs.jsonl"
    preset: str = DEFAULT_PRESET
    default_k: int = 20
    augment_default: bool = True
    request_timeout: float = 30.0
    max_query_length: int = 2000
    cors: bool = False
    embedding: ProviderSettings = field(default_factory=ProviderSettings)
    augmentation: ProviderSettings = field(
        default_factory=lambda: ProviderSettings(timeout=20.0)
    )

    def validate(self) -> None:
        if self.max_query_length < 1:
            raise ValueError("max_query_length must be >= 1")
        if not 1 <= self.default_k <= 100:
            raise ValueError("default_k must be in [1, 100]")
        if not 1 <= self.port <= 65535:
            raise ValueError("port must be in [1, 65535]")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; valid: {sorted(PRESETS)}")
        self.embedding.validate("embedding")
        self.augmentation.validate("augmentation")


_BOOL_WORDS = {
    "1": True,
    "true": True,
    "yes": True,
    "on": True,
    "0": False,
    "false": False,
    "no": False,
    "off": False,
}


def _coerce(name: str, raw: Any, target_type: type) -> Any:
    if target_type is bool:
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, str) and raw.strip().lower() in _BOOL_WORDS:
            return _BOOL_WORDS[raw.strip().lower()]
        raise ValueError(f"{name} must be a boolean (true/false), got {raw!r}")
    if target_type is int:
        if isinstance(raw, bool) or (not isinstance(raw, (int, str))):
            raise ValueError(f"{name} must be an integer, got {raw!r}")
        return int(raw)
    if target_type is float:
        if isinstance(raw, bool) or (not isinstance(raw, (int, float, str))):
            raise ValueError(f"{name} must be a number, got {raw!r}")
        return float(raw)
    if raw is None:
        return None
    if not isinstance(raw, str):
        raise ValueError(f"{name} must be a string, got {raw!r}")
    return raw


_PROVIDER_TYPES = {f.name: f.type for f in fields(ProviderSettings)}
_SCALAR_TYPES = {
    "host": str,
    "port": int,
    "index_path": str,
    "corpus_path": str,
    "pairs_path": str,
    "preset": str,
    "default_k": int,
    "augment_default": bool,
    "request_timeout": float,
    "max_query_length": int,
    "cors": bool,
}
_PROVIDER_FIELD_TYPES = {
    "kind": str,
    "endpoint": str,
    "model": str,
    "api_key": str,
    "timeout": float,
    "dim": int,
}


def _apply_provider(settings: ProviderSettings, data: Mapping[str, Any], where: str) -> ProviderSettings:
    updates: dict[str, Any] = {}
    for key, raw in data.items():
        if key not in _PROVIDER_FIELD_TYPES:
            raise ValueError(f"unknown key {where}.{key}")
        updates[key] = _coerce(f"{where}.{key}", raw, _PROVIDER_FIELD_TYPES[key])
    return replace(settings, **updates)


def _apply_mapping(config: ServiceConfig, data: Mapping[str, Any], source: str) -> ServiceConfig:
    updates: dict[str, Any] = {}
    for key, raw in data.items():
        if key in ("embedding", "augmentation"):
            if not isinstance(raw, Mapping):
                raise ValueError(f"{source}: {key} must be an object")
            current = getattr(config, key)
            updates[key] = _apply_provider(current, raw, key)
        elif key in _SCALAR_TYPES:
            updates[key] = _coerce(key, raw, _SCALAR_TYPES[key])
        else:
            raise ValueError(f"{source}: unknown key {key!r}")
    return replace(config, **updates)


def _env_overrides(env: Mapping[str, str]) -> dict[str, Any]:
    data: dict[str, Any] = {}
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX) :].lower()
        for section in ("embedding", "augmentation"):
            prefix = f"{section}_"
            if name.startswith(prefix):
                data.setdefault(section, {})[name[len(prefix) :]] = value
                break
        else:
            data[name] = value
    return data


def load_config(path: str | None = None, env: Mapping[str, str] | None = None) -> ServiceConfig:
    """Defaults, then the JSON file at `path` (if given), then env overrides."""
    config = ServiceConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        config = _apply_mapping(config, data, path)
    env_data = _env_overrides(env if env is not None else os.environ)
    if env_data:
        config = _apply_mapping(config, env_data, "environment")
    config.validate()
    return config


def build_embedding_provider(settings: ProviderSettings) -> EmbeddingProvider:
    if settings.kind == "mock":
        return MockEmbeddingProvider(dim=settings.dim)
    if settings.kind == "http":
        return HttpEmbeddingProvider(
            endpoint=settings.endpoint,
            model=settings.model,
            dim=settings.dim,
            api_key=settings.api_key,
            timeout=settings.timeout,
        )
    raise ValueError("embedding provider kind 'none' is not allowed: search needs an embedder")


def build_generation_provider(settings: ProviderSettings) -> TextGenerationProvider | None:
    if settings.kind == "none":
        return None
    if settings.kind == "mock":
        return MockTextGenerationProvider()
    return HttpTextGenerationProvider(
        endpoint=settings.endpoint,
        model=settings.model,
        api_key=settings.api_key,
        timeout=settings.timeout,
    )
