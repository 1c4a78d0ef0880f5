"""HTTP search service over prebuilt artifacts.

The service is read-only: ingestion, informalization, embedding, and index
construction all happen in the CLI; `serve` only loads their outputs and
fails fast when anything is missing or inconsistent. Identical requests
against an unchanged index return identical bodies (augmentation off, mock
embedder); wall-clock timing therefore travels in the `X-Timing-Ms` response
header, never in the body.
"""

from __future__ import annotations

import logging
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ServiceConfig, build_embedding_provider, build_generation_provider
from .corpus import load_corpus_file
from .hnsw import HnswIndex
from .informalize import load_pairs_file
from .pipeline import SearchEngine, SearchOutcome
from .providers import EmbeddingProvider, ProviderError, TextGenerationProvider

logger = logging.getLogger(__name__)

_K_CEILING = 100

_UNSET = object()


def error_body(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(error_body(code, message), status_code=status)


def search_response_body(outcome: SearchOutcome) -> dict:
    """The one formatter for search results; the CLI's --json output and the
    HTTP body must stay content-identical."""
    results = []
    for r in outcome.results:
        results.append(
            {
                "rank": r.rank,
                "theorem_id": r.theorem.id,
                "name": r.theorem.name,
                "formal_statement": r.theorem.formal_statement,
                "informal_name": r.informal.informal_name if r.informal else None,
                "informal_statement": r.informal.informal_statement if r.informal else None,
                "score": r.score,
            }
        )
    aq = outcome.query
    augmented_query = None
    if aq.augmented:
        augmented_query = {
            "original": aq.original,
            "formal_statement": aq.formal_statement,
            "informal_name": aq.informal_name,
            "informal_statement": aq.informal_statement,
        }
    return {"results": results, "augmented_query": augmented_query}


def theorem_response_body(engine: SearchEngine, theorem_id: str) -> dict | None:
    record = engine.records.get(theorem_id)
    if record is None:
        return None
    pair = engine.pairs.get(theorem_id)
    return {
        "theorem_id": record.id,
        "name": record.name,
        "formal_statement": record.formal_statement,
        "informal_name": pair.informal_name if pair else None,
        "informal_statement": pair.informal_statement if pair else None,
        "docstring": record.docstring,
        "source_path": record.source_path,
        "kind": record.kind,
    }


def build_engine(
    config: ServiceConfig,
    embedding_provider: EmbeddingProvider | None = None,
    augmentation_provider: TextGenerationProvider | None | object = _UNSET,
) -> SearchEngine:
    """Load corpus, pairs, and index; wire providers; fail fast on any skew."""
    parsed = load_corpus_file(config.corpus_path)
    pairs = load_pairs_file(config.pairs_path)
    index = HnswIndex.load(config.index_path)
    embedder = embedding_provider or build_embedding_provider(config.embedding)
    if embedder.dim != index.dim:
        raise ValueError(
            f"embedding provider dim {embedder.dim} does not match index dim {index.dim}"
        )
    if augmentation_provider is _UNSET:
        gen = build_generation_provider(config.augmentation)
    else:
        gen = augmentation_provider  # type: ignore[assignment]
    return SearchEngine(parsed.records, pairs, index, embedder, gen, preset=config.preset)


def create_app(engine: SearchEngine, config: ServiceConfig) -> FastAPI:
    config.validate()
    app = FastAPI(title="theoremsearch", openapi_url=None, docs_url=None, redoc_url=None)

    if config.cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
            expose_headers=["X-Timing-Ms"],
        )

    @app.get("/health")
    def health() -> dict:
        # Liveness is local: no provider is touched here.
        p = engine.index.params
        return {
            "status": "ok",
            "corpus_size": len(engine.records),
            "indexed": len(engine.index),
            "index": {
                "dim": engine.index.dim,
                "m": p.m,
                "m0": p.m0,
                "ef_construction": p.ef_construction,
                "ef_search": p.ef_search,
            },
        }

    @app.post("/search")
    async def search(request: Request) -> JSONResponse:
        started = time.perf_counter()
        try:
            payload = await request.json()
        except Exception:
            return _error(400, "invalid_json", "request body must be a JSON object")
        if not isinstance(payload, dict):
            return _error(400, "invalid_json", "request body must be a JSON object")

        query = payload.get("query")
        if not isinstance(query, str) or not query.strip():
            return _error(400, "empty_query", "query must be a non-empty string")
        if len(query) > config.max_query_length:
            return _error(
                400,
                "query_too_long",
                f"query exceeds the {config.max_query_length} character limit",
            )
        k = payload.get("k", config.default_k)
        if isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= _K_CEILING:
            return _error(400, "invalid_k", f"k must be an integer in [1, {_K_CEILING}]")
        augment = payload.get("augment", config.augment_default)
        if not isinstance(augment, bool):
            return _error(400, "invalid_augment", "augment must be a boolean")

        try:
            outcome = engine.run_search(query, k=k, augment=augment)
        except ProviderError as exc:
            return _error(502, "provider_unavailable", str(exc))
        except ValueError as exc:
            return _error(400, "invalid_request", str(exc))
        except Exception:
            logger.exception("search failed for query %r", query)
            return _error(500, "internal", "internal server error")

        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return JSONResponse(
            search_response_body(outcome), headers={"X-Timing-Ms": f"{elapsed_ms:.3f}"}
        )

    @app.get("/theorem/{theorem_id}")
    def theorem(theorem_id: str) -> JSONResponse:
        body = theorem_response_body(engine, theorem_id)
        if body is None:
            return _error(404, "not_found", f"no theorem with id {theorem_id!r}")
        return JSONResponse(body)

    return app


def serve(config: ServiceConfig) -> None:
    """Blocking entry point: load artifacts, then run the HTTP server."""
    import uvicorn

    engine = build_engine(config)
    app = create_app(engine, config)
    uvicorn.run(
        app,
        host=config.host,
        port=config.port,
        timeout_graceful_shutdown=int(config.request_timeout),
        log_level="info",
    )
