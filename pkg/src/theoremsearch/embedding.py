"""Instruction templates, truncation, the offline mock embedder, and the vector cache.

Texts are wrapped in a task instruction, truncated, then embedded. The
instruction strings for the shipped presets are frozen verbatim; the
placeholder token is ``{text}`` and each template contains it exactly once.
"""

from __future__ import annotations

import hashlib
import os
import struct
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .providers import EmbeddingProvider, ProviderError

PLACEHOLDER = "{text}"
TRUNCATION_LIMIT = 4096

# Bilingual corpus, augmented bilingual query (the default operating point).
BILINGUAL_INSTRUCTION = (
    "Retrieve math theorems stated in bilingual Lean 4 + natural language "
    "that are mathematically equivalent to the given one"
)
DOC_TEMPLATE_BILINGUAL = f"Instruct: {BILINGUAL_INSTRUCTION}\nDoc:{PLACEHOLDER}"
QUERY_TEMPLATE_BILINGUAL = f"Instruct: {BILINGUAL_INSTRUCTION}\nQuery:{PLACEHOLDER}"

# Formal-only corpus with raw (unaugmented) queries.
QUERY_INSTRUCTION_FORMAL_CORPUS = (
    "Given a math search query, retrieve theorems stated in Lean 4 that mathematically match the query"
)
DOC_INSTRUCTION_FORMAL_CORPUS = (
    "Represent the given formal math statement written in Lean 4 "
    "for retrieving related statement by natural language query"
)

# Informal-only corpus with raw queries.
QUERY_INSTRUCTION_INFORMAL_CORPUS = (
    "Given a math search query, retrieve theorems mathematically equivalent to the query"
)
DOC_INSTRUCTION_INFORMAL_CORPUS = (
    "Represent the given math theorem statement for retrieving related statement by natural language query"
)

# Bilingual corpus with raw queries.
QUERY_INSTRUCTION_BILINGUAL_RAW = (
    "Given a math search query, retrieve theorems stated in bilingual Lean 4 + natural language "
    "that mathematically match the query"
)
DOC_INSTRUCTION_BILINGUAL_RAW = (
    "Represent the given formal math statement written in Lean 4 concatenated with its natural "
    "language explanation for retrieving related statement by natural language query"
)

# Symmetric instructions: query augmented to match the corpus type.
INSTRUCTION_FORMAL_SYMMETRIC = (
    "Retrieve math theorems stated in Lean 4 that are mathematically equivalent to the given one"
)
INSTRUCTION_INFORMAL_SYMMETRIC = "Retrieve math theorems that are mathematically equivalent to the given one"


@dataclass(frozen=True)
class InstructionPreset:
    """One side's instruction template; exactly one placeholder slot."""

    preset_id: str
    side: str
    template: str

    def __post_init__(self):
        if self.side not in ("query", "doc"):
            raise ValueError(f"side must be 'query' or 'doc', got {self.side!r}")
        if self.template.count(PLACEHOLDER) != 1:
            raise ValueError(f"template must contain exactly one {PLACEHOLDER} slot")


@dataclass(frozen=True)
class PresetPair:
    """Query+doc templates plus the corpus document mode they expect."""

    preset_id: str
    query: InstructionPreset
    doc: InstructionPreset
    doc_mode: str  # formal | informal | bilingual

    def __post_init__(self):
        if self.doc_mode not in ("formal", "informal", "bilingual"):
            raise ValueError(f"unknown doc_mode {self.doc_mode!r}")


def _pair(preset_id: str, query_template: str, doc_template: str, doc_mode: str) -> PresetPair:
    return PresetPair(
        preset_id=preset_id,
        query=InstructionPreset(preset_id, "query", query_template),
        doc=InstructionPreset(preset_id, "doc", doc_template),
        doc_mode=doc_mode,
    )


def _wrap(instruction: str, side: str) -> str:
    label = "Query" if side == "query" else "Doc"
    return f"Instruct: {instruction}\n{label}:{PLACEHOLDER}"


PRESETS: dict[str, PresetPair] = {
    "bilingual": _pair("bilingual", QUERY_TEMPLATE_BILINGUAL, DOC_TEMPLATE_BILINGUAL, "bilingual"),
    "formal-corpus": _pair(
        "formal-corpus",
        _wrap(QUERY_INSTRUCTION_FORMAL_CORPUS, "query"),
        _wrap(DOC_INSTRUCTION_FORMAL_CORPUS, "doc"),
        "formal",
    ),
    "informal-corpus": _pair(
        "informal-corpus",
        _wrap(QUERY_INSTRUCTION_INFORMAL_CORPUS, "query"),
        _wrap(DOC_INSTRUCTION_INFORMAL_CORPUS, "doc"),
        "informal",
    ),
    "bilingual-raw-query": _pair(
        "bilingual-raw-query",
        _wrap(QUERY_INSTRUCTION_BILINGUAL_RAW, "query"),
        _wrap(DOC_INSTRUCTION_BILINGUAL_RAW, "doc"),
        "bilingual",
    ),
    "formal-symmetric": _pair(
        "formal-symmetric",
        _wrap(INSTRUCTION_FORMAL_SYMMETRIC, "query"),
        _wrap(INSTRUCTION_FORMAL_SYMMETRIC, "doc"),
        "formal",
    ),
    "informal-symmetric": _pair(
        "informal-symmetric",
        _wrap(INSTRUCTION_INFORMAL_SYMMETRIC, "query"),
        _wrap(INSTRUCTION_INFORMAL_SYMMETRIC, "doc"),
        "informal",
    ),
    "none": _pair("none", PLACEHOLDER, PLACEHOLDER, "bilingual"),
}

DEFAULT_PRESET = "bilingual"


@dataclass
class EmbeddingVector:
    dim: int
    values: np.ndarray
    provider_id: str
    preset_id: str


def apply_instruction(preset: InstructionPreset, text: str) -> str:
    """Substitute the placeholder; every other byte of the template is kept."""
    return preset.template.replace(PLACEHOLDER, text, 1)


def truncate_chars(text: str, limit: int = TRUNCATION_LIMIT) -> str:
    """Prefix-preserving cut to at most `limit` characters."""
    if limit <= 0:
        raise ValueError("limit must be positive")
    return text[:limit]


def normalize(values) -> np.ndarray:
    """Scale to unit L2 norm. Zero vectors have no direction: error."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite values")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return (arr / norm).astype(np.float32)


def mock_embed(text: str, dim: int, preset_id: str = "none") -> EmbeddingVector:
    """Deterministic offline embedding: hashed character-trigram counts.

    Each trigram lands in digest(trigram) mod dim; counts are accumulated and
    the bucket vector L2-normalized. Inputs shorter than 3 characters count as
    a single gram; the empty text maps to the first basis vector.
    """
    if dim < 8:
        raise ValueError("dim must be at least 8")
    values = np.zeros(dim, dtype=np.float64)
    if not text:
        values[0] = 1.0
        return EmbeddingVector(dim=dim, values=values.astype(np.float32), provider_id="mock-trigram", preset_id=preset_id)
    grams = [text[i : i + 3] for i in range(len(text) - 2)] if len(text) >= 3 else [text]
    for gram in grams:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        values[int.from_bytes(digest, "little") % dim] += 1.0
    return EmbeddingVector(dim=dim, values=normalize(values), provider_id="mock-trigram", preset_id=preset_id)


class MockEmbeddingProvider:
    """Offline embedding provider backed by mock_embed; never fails."""

    def __init__(self, dim: int = 64):
        if dim < 8:
            raise ValueError("dim must be at least 8")
        self.dim = dim
        self.provider_id = "mock-embed"
        self.call_count = 0
        self.texts_seen = 0

    def embed(self, texts: list[str]) -> list[list[float]]:
        self.call_count += 1
        self.texts_seen += len(texts)
        return [mock_embed(t, self.dim).values.tolist() for t in texts]


def cache_key(provider_id: str, preset_id: str, text: str) -> bytes:
    h = hashlib.sha256()
    h.update(provider_id.encode("utf-8"))
    h.update(b"\x00")
    h.update(preset_id.encode("utf-8"))
    h.update(b"\x00")
    h.update(text.encode("utf-8"))
    return h.digest()


_CACHE_HEADER = struct.Struct("<32sI")


class EmbeddingCache:
    """Append-only binary log: (sha256 key, uint32 dim, dim float32 LE).

    Reads tolerate a truncated trailing record (interrupted write): parsing
    stops at the last complete record. Writes are serialized by a lock.
    """

    def __init__(self, path: str | None = None):
        self.path = path
        self._store: dict[bytes, np.ndarray] = {}
        self._lock = threading.Lock()
        if path is not None and os.path.exists(path):
            self._load(path)

    def _load(self, path: str) -> None:
        with open(path, "rb") as fh:
            data = fh.read()
        offset = 0
        while offset + _CACHE_HEADER.size <= len(data):
            key, dim = _CACHE_HEADER.unpack_from(data, offset)
            body_end = offset + _CACHE_HEADER.size + 4 * dim
            if body_end > len(data):
                break
            values = np.frombuffer(data[offset + _CACHE_HEADER.size : body_end], dtype="<f4")
            self._store[key] = values.astype(np.float32)
            offset = body_end

    def __len__(self) -> int:
        return len(self._store)

    def get(self, key: bytes) -> np.ndarray | None:
        return self._store.get(key)

    def put(self, key: bytes, values: np.ndarray) -> None:
        arr = np.asarray(values, dtype="<f4")
        with self._lock:
            if key in self._store:
                return
            self._store[key] = arr.astype(np.float32)
            if self.path is not None:
                with open(self.path, "ab") as fh:
                    fh.write(_CACHE_HEADER.pack(key, arr.size))
                    fh.write(arr.tobytes())


def embed_batch(
    texts: list[str],
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None = None,
    preset_id: str = "none",
    batch_size: int = 64,
    concurrency: int = 4,
) -> list[EmbeddingVector]:
    """Embed prepared (instruction-applied, truncated) texts in input order.

    Cache hits never reach the provider; misses are deduplicated, chunked,
    and requested with bounded concurrency, then written back to the cache.
    """
    keys = [cache_key(provider.provider_id, preset_id, t) for t in texts]
    resolved: dict[bytes, np.ndarray] = {}
    if cache is not None:
        for k in keys:
            hit = cache.get(k)
            if hit is not None:
                resolved[k] = hit

    miss_texts: list[str] = []
    miss_keys: list[bytes] = []
    seen: set[bytes] = set()
    for text, key in zip(texts, keys):
        if key in resolved or key in seen:
            continue
        seen.add(key)
        miss_texts.append(text)
        miss_keys.append(key)

    if miss_texts:
        chunks = [miss_texts[i : i + batch_size] for i in range(0, len(miss_texts), batch_size)]
        if len(chunks) == 1 or concurrency <= 1:
            chunk_results = [provider.embed(c) for c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=concurrency) as pool:
                chunk_results = list(pool.map(provider.embed, chunks))
        flat: list[list[float]] = [vec for chunk in chunk_results for vec in chunk]
        if len(flat) != len(miss_texts):
            raise ProviderError(f"provider returned {len(flat)} vectors for {len(miss_texts)} texts")
        for key, vec in zip(miss_keys, flat):
            if len(vec) != provider.dim:
                raise ProviderError(f"dimension mismatch: expected {provider.dim}, got {len(vec)}")
            unit = normalize(vec)
            resolved[key] = unit
            if cache is not None:
                cache.put(key, unit)

    return [
        EmbeddingVector(dim=provider.dim, values=resolved[k], provider_id=provider.provider_id, preset_id=preset_id)
        for k in keys
    ]
