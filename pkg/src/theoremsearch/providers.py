"""Pluggable text-generation and embedding providers.

Both interfaces are deliberately minimal: one text-in/text-out completion
call, and one batch embedding call. Remote implementations speak a small
JSON-over-HTTP protocol; deterministic offline mocks live in `mocks`.
"""

from __future__ import annotations

import threading
import time
from typing import Protocol, runtime_checkable

import httpx


class ProviderError(Exception):
    """Transport or contract failure talking to a provider."""


@runtime_checkable
class TextGenerationProvider(Protocol):
    provider_id: str

    def generate(self, prompt: str, *, temperature: float = 0.0, max_output_chars: int = 4096) -> str: ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed(self, texts: list[str]) -> list[list[float]]: ...


class RateLimiter:
    """Thread-safe minimum-interval limiter shared across pipeline workers."""

    def __init__(self, per_second: float | None = None):
        self._interval = 1.0 / per_second if per_second else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def acquire(self) -> None:
        if self._interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_at - now
            self._next_at = max(now, self._next_at) + self._interval
        if wait > 0:
            time.sleep(wait)


class HttpTextGenerationProvider:
    """Remote completion service: POST {model, prompt, temperature, max_output_chars} -> {text}."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 20.0,
        provider_id: str | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.provider_id = provider_id or f"http-gen:{model}"

    def generate(self, prompt: str, *, temperature: float = 0.0, max_output_chars: int = 4096) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        payload = {
            "model": self.model,
            "prompt": prompt,
            "temperature": temperature,
            "max_output_chars": max_output_chars,
        }
        try:
            resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
        except httpx.HTTPError as exc:
            raise ProviderError(f"generation request failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderError(f"generation response is not valid JSON: {exc}") from exc
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise ProviderError("generation response missing 'text' field")
        return body["text"]


class HttpEmbeddingProvider:
    """Remote embedding service: POST {model, inputs[]} -> {vectors[][]}."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        dim: int,
        api_key: str | None = None,
        timeout: float = 10.0,
        retries: int = 2,
        provider_id: str | None = None,
    ):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self.api_key = api_key
        self.timeout = timeout
        self.retries = retries
        self.provider_id = provider_id or f"http-embed:{model}"

    def embed(self, texts: list[str]) -> list[list[float]]:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        payload = {"model": self.model, "inputs": list(texts)}
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                body = resp.json()
                break
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.25 * (attempt + 1))
        else:
            raise ProviderError(f"embedding request failed after {self.retries + 1} attempts: {last_error}")
        vectors = body.get("vectors") if isinstance(body, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("embedding response missing or mis-sized 'vectors' field")
        return vectors
