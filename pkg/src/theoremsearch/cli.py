"""Command-line driver for the full pipeline.

Stages (ingest, informalize, embed, index) write artifacts into one workspace
directory and chain through the manifest; serve/search/bench consume those
artifacts. Exit codes are a stable scripting contract: 0 success, 1 usage
error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys

import click
import numpy as np

from .benchmark import (
    BenchmarkFormatError,
    EngineFailure,
    evaluate,
    evaluate_rankings,
    load_benchmark,
    load_runfile,
)
from .bm25 import Bm25Index
from .config import (
    ServiceConfig,
    build_embedding_provider,
    build_generation_provider,
    load_config,
)
from .corpus import VALID_KINDS, load_corpus_file, select_search_records, serialize_corpus
from .embedding import EmbeddingCache, MockEmbeddingProvider, embed_batch
from .hnsw import HnswIndex, HnswParams, brute_force_topk, recall_at_k
from .informalize import format_document, load_pairs_file, read_pair_records, informalize_corpus
from .manifest import Manifest, StaleStageError, combine_hashes, file_hash
from .mocks import MockTextGenerationProvider
from .pipeline import prepare_document_text, resolve_preset
from .providers import ProviderError
from .report import write_report
from .service import build_engine, search_response_body

DEFAULT_WORKSPACE = "artifacts"

CORPUS_FILE = "corpus.jsonl"
PAIRS_FILE = "pairs.jsonl"
CACHE_FILE = "cache.bin"
VECTORS_FILE = "vectors.npz"
INDEX_FILE = "index.hnsw"
MANIFEST_FILE = "manifest.json"

AUDIT_THRESHOLD = 0.95


class DataError(RuntimeError):
    """Bad or inconsistent input data; maps to exit code 2."""


def _workspace(out: str) -> str:
    os.makedirs(out, exist_ok=True)
    return out


def _path(out: str, name: str) -> str:
    return os.path.join(out, name)


def _load_manifest(out: str) -> Manifest:
    return Manifest.load(_path(out, MANIFEST_FILE))


def _resolve_config(config_path: str | None, out: str | None, mock: bool) -> ServiceConfig:
    config = load_config(config_path)
    if out is not None:
        config = dataclasses.replace(
            config,
            corpus_path=_path(out, CORPUS_FILE),
            pairs_path=_path(out, PAIRS_FILE),
            index_path=_path(out, INDEX_FILE),
        )
    if mock:
        config = dataclasses.replace(
            config,
            embedding=dataclasses.replace(config.embedding, kind="mock"),
            augmentation=dataclasses.replace(config.augmentation, kind="mock"),
        )
    return config


@click.group()
def cli() -> None:
    """Semantic search over formal theorem libraries."""


@cli.command("ingest")
@click.option("--corpus", "corpus_in", required=True, help="Source interchange file (JSONL).")
@click.option("--out", default=DEFAULT_WORKSPACE, show_default=True, help="Workspace directory.")
@click.option(
    "--kinds",
    multiple=True,
    default=("theorem",),
    show_default=True,
    type=click.Choice(VALID_KINDS),
    help="Record kinds admitted into the search corpus.",
)
@click.option("--strict", is_flag=True, help="Treat any diagnostic as fatal.")
def cmd_ingest(corpus_in: str, out: str, kinds: tuple[str, ...], strict: bool) -> None:
    """Validate the source corpus and write its canonical form."""
    out = _workspace(out)
    settings = {"kinds": sorted(set(kinds))}
    input_hash = combine_hashes(file_hash(corpus_in), settings=settings)
    manifest = _load_manifest(out)
    if manifest.is_current("ingest", input_hash):
        click.echo("ingest is current; nothing to do")
        return

    parsed = load_corpus_file(corpus_in)
    kept = select_search_records(parsed.records, kinds)
    for diag in parsed.diagnostics:
        click.echo(f"line {diag.line_no}: [{diag.kind}] {diag.message}", err=True)
    click.echo(f"{len(kept)} records kept, {len(parsed.diagnostics)} diagnostics")
    if strict and parsed.diagnostics:
        raise DataError(f"strict mode: {len(parsed.diagnostics)} diagnostics")
    if not kept:
        raise DataError("no records admitted into the search corpus")

    corpus_out = _path(out, CORPUS_FILE)
    with open(corpus_out, "w", encoding="utf-8") as fh:
        fh.write(serialize_corpus(kept))
    manifest.record("ingest", input_hash, corpus_out, settings)
    manifest.save()


@cli.command("informalize")
@click.option("--out", default=DEFAULT_WORKSPACE, show_default=True)
@click.option("--config", "config_path", default=None, help="Provider configuration file.")
@click.option("--mock-providers", is_flag=True, help="Use deterministic offline providers.")
@click.option("--concurrency", default=4, show_default=True)
def cmd_informalize(out: str, config_path: str | None, mock_providers: bool, concurrency: int) -> None:
    """Generate an informal name and statement for every corpus record."""
    out = _workspace(out)
    manifest = _load_manifest(out)
    prior = manifest.verify_chain("ingest")

    config = _resolve_config(config_path, out, mock_providers)
    provider = build_generation_provider(config.augmentation)
    if provider is None:
        raise DataError("informalization needs a text-generation provider (kind none given)")
    settings = {"provider": provider.provider_id}
    input_hash = combine_hashes(prior.output_hash, settings=settings)
    if manifest.is_current("informalize", input_hash):
        click.echo("informalize is current; nothing to do")
        return

    records = load_corpus_file(_path(out, CORPUS_FILE)).records
    pairs_path = _path(out, PAIRS_FILE)
    cached = {}
    if os.path.exists(pairs_path):
        with open(pairs_path, encoding="utf-8") as fh:
            cached = read_pair_records(fh)
    fresh = 0

    def progress(done: int, total: int, was_cached: bool) -> None:
        nonlocal fresh
        if not was_cached:
            fresh += 1

    pairs = informalize_corpus(
        records,
        provider,
        out_path=pairs_path,
        cached=cached,
        concurrency=concurrency,
        on_progress=progress,
    )
    click.echo(f"{len(pairs)} pairs ready ({fresh} generated, {len(pairs) - fresh} reused)")
    manifest.record("informalize", input_hash, pairs_path, settings)
    manifest.save()


@cli.command("embed")
@click.option("--out", default=DEFAULT_WORKSPACE, show_default=True)
@click.option("--config", "config_path", default=None)
@click.option("--mock-providers", is_flag=True)
@click.option("--preset", default=None, help="Instruction preset pair (defaults to config).")
def cmd_embed(out: str, config_path: str | None, mock_providers: bool, preset: str | None) -> None:
    """Embed every corpus document with the configured preset."""
    out = _workspace(out)
    manifest = _load_manifest(out)
    prior = manifest.verify_chain("informalize")

    config = _resolve_config(config_path, out, mock_providers)
    provider = build_embedding_provider(config.embedding)
    pair_preset = resolve_preset(preset or config.preset)
    settings = {
        "provider": provider.provider_id,
        "preset": pair_preset.preset_id,
        "dim": provider.dim,
    }
    input_hash = combine_hashes(prior.output_hash, settings=settings)
    if manifest.is_current("embed", input_hash):
        click.echo("embed is current; nothing to do")
        return

    records = load_corpus_file(_path(out, CORPUS_FILE)).records
    pairs = load_pairs_file(_path(out, PAIRS_FILE))
    missing = [r.id for r in records if r.id not in pairs]
    if missing:
        raise DataError(f"{len(missing)} records lack informal pairs (first: {missing[0]})")

    texts = [prepare_document_text(r, pairs[r.id], pair_preset) for r in records]
    cache = EmbeddingCache(_path(out, CACHE_FILE))
    vectors = embed_batch(texts, provider, cache=cache, preset_id=pair_preset.preset_id)
    matrix = np.stack([v.values for v in vectors]).astype(np.float32)
    vectors_path = _path(out, VECTORS_FILE)
    np.savez(
        vectors_path,
        ids=np.array([r.id for r in records]),
        matrix=matrix,
        preset=np.array(pair_preset.preset_id),
        provider=np.array(provider.provider_id),
    )
    click.echo(f"{len(records)} documents embedded at dim {provider.dim}")
    manifest.record("embed", input_hash, vectors_path, settings)
    manifest.save()


@cli.command("index")
@click.option("--out", default=DEFAULT_WORKSPACE, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Level-assignment RNG seed.")
@click.option("--ef-construction", default=200, show_default=True)
@click.option("--ef-search", default=100, show_default=True)
def cmd_index(out: str, seed: int, ef_construction: int, ef_search: int) -> None:
    """Build the proximity graph and audit its recall on a 1% sample."""
    out = _workspace(out)
    manifest = _load_manifest(out)
    prior = manifest.verify_chain("embed")

    params = HnswParams(ef_construction=ef_construction, ef_search=ef_search, seed=seed)
    settings = {
        "seed": seed,
        "m": params.m,
        "m0": params.m0,
        "ef_construction": ef_construction,
        "ef_search": ef_search,
    }
    input_hash = combine_hashes(prior.output_hash, settings=settings)
    if manifest.is_current("index", input_hash):
        click.echo("index is current; nothing to do")
        return

    bundle = np.load(_path(out, VECTORS_FILE))
    ids = [str(i) for i in bundle["ids"]]
    matrix = bundle["matrix"]
    index = HnswIndex(dim=int(matrix.shape[1]), params=params)
    for id, row in zip(ids, matrix):
        index.insert(id, row)

    sample_n = max(1, len(ids) // 100)
    rng = np.random.default_rng(0)
    sample = rng.choice(len(ids), size=sample_n, replace=False)
    recalls = []
    for i in sample:
        exact = brute_force_topk(ids, matrix, matrix[i], k=10)
        approx = index.search(matrix[i], k=10)
        recalls.append(recall_at_k(approx, exact, 10))
    mean_recall = float(np.mean(recalls))
    click.echo(f"recall audit: mean recall@10 over {sample_n} sampled vectors = {mean_recall:.4f}")
    if mean_recall < AUDIT_THRESHOLD:
        click.echo(f"warning: sample recall below {AUDIT_THRESHOLD:.2f}", err=True)

    index_path = _path(out, INDEX_FILE)
    index.save(index_path)
    click.echo(f"{len(ids)} vectors indexed")
    manifest.record("index", input_hash, index_path, settings)
    manifest.save()


@cli.command("serve")
@click.option("--out", default=None, help="Workspace directory holding the artifacts.")
@click.option("--config", "config_path", default=None)
@click.option("--mock-providers", is_flag=True)
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--cors", is_flag=True, default=None)
def cmd_serve(
    out: str | None,
    config_path: str | None,
    mock_providers: bool,
    host: str | None,
    port: int | None,
    cors: bool | None,
) -> None:
    """Run the HTTP search service over prebuilt artifacts."""
    from . import service

    config = _resolve_config(config_path, out, mock_providers)
    overrides = {}
    if host is not None:
        overrides["host"] = host
    if port is not None:
        overrides["port"] = port
    if cors:
        overrides["cors"] = True
    if overrides:
        config = dataclasses.replace(config, **overrides)
    service.serve(config)


@cli.command("search")
@click.argument("query")
@click.option("--out", default=None, help="Workspace directory holding the artifacts.")
@click.option("--config", "config_path", default=None)
@click.option("--mock-providers", is_flag=True)
@click.option("--k", default=None, type=int)
@click.option("--augment/--no-augment", "augment", default=None)
@click.option("--preset", default=None)
@click.option("--json", "as_json", is_flag=True, help="Emit the service response body.")
@click.option("--ef", default=None, type=int, help="Search beam width override.")
def cmd_search(
    query: str,
    out: str | None,
    config_path: str | None,
    mock_providers: bool,
    k: int | None,
    augment: bool | None,
    preset: str | None,
    as_json: bool,
    ef: int | None,
) -> None:
    """Search the indexed corpus from the terminal."""
    config = _resolve_config(config_path, out, mock_providers)
    if preset is not None:
        config = dataclasses.replace(config, preset=preset)
    engine = build_engine(config)
    outcome = engine.run_search(
        query,
        k=k if k is not None else config.default_k,
        augment=augment if augment is not None else config.augment_default,
        ef=ef,
    )
    if as_json:
        click.echo(json.dumps(search_response_body(outcome), ensure_ascii=False, indent=2))
        return
    if outcome.query.augmented:
        click.echo(f"augmented: {outcome.query.informal_name} | {outcome.query.formal_statement}")
    click.echo(f"{'rank':>4}  {'score':>7}  {'name':<40} informal name")
    for result in outcome.results:
        informal = result.informal.informal_name if result.informal else "(no informal pair)"
        click.echo(f"{result.rank:>4}  {result.score:>7.4f}  {result.theorem.name:<40} {informal}")


@cli.command("bench")
@click.argument("benchmark_file")
@click.option(
    "--engine",
    "engine_kind",
    type=click.Choice(["semantic", "bm25", "runfile"]),
    default="semantic",
    show_default=True,
)
@click.option("--runfile", "runfile_path", default=None, help="Pre-recorded rankings (engine=runfile).")
@click.option("--out", default=None, help="Workspace directory holding the artifacts.")
@click.option("--report-dir", default="report", show_default=True)
@click.option("--config", "config_path", default=None)
@click.option("--mock-providers", is_flag=True)
@click.option("--augment/--no-augment", "augment", default=False, show_default=True)
@click.option("--preset", default=None)
@click.option(
    "--idcg-mode",
    type=click.Choice(["retrieved", "global"]),
    default="retrieved",
    show_default=True,
)
def cmd_bench(
    benchmark_file: str,
    engine_kind: str,
    runfile_path: str | None,
    out: str | None,
    report_dir: str,
    config_path: str | None,
    mock_providers: bool,
    augment: bool,
    preset: str | None,
    idcg_mode: str,
) -> None:
    """Score an engine against a labeled benchmark and render the report."""
    groups = load_benchmark(benchmark_file)

    if engine_kind == "runfile":
        if runfile_path is None:
            raise click.UsageError("--runfile is required when --engine runfile")
        report = evaluate_rankings(load_runfile(runfile_path), groups, idcg_mode=idcg_mode)
    elif engine_kind == "bm25":
        config = _resolve_config(config_path, out, mock_providers)
        records = load_corpus_file(config.corpus_path).records
        pairs = load_pairs_file(config.pairs_path)
        doc_mode = resolve_preset(preset or config.preset).doc_mode
        documents = {
            r.id: format_document(r, pairs.get(r.id), doc_mode) for r in records
        }
        bm25 = Bm25Index(documents)
        report = evaluate(
            lambda text: [hit.id for hit in bm25.search(text, k=20)],
            groups,
            idcg_mode=idcg_mode,
        )
    else:
        config = _resolve_config(config_path, out, mock_providers)
        if preset is not None:
            config = dataclasses.replace(config, preset=preset)
        engine = build_engine(config)
        report = evaluate(
            lambda text: [
                r.theorem.id for r in engine.run_search(text, k=20, augment=augment).results
            ],
            groups,
            idcg_mode=idcg_mode,
        )

    artifacts = write_report(report, report_dir)
    with open(artifacts["summary"], encoding="utf-8") as fh:
        click.echo(fh.read().rstrip())
    for key in ("table", "queries", "summary"):
        click.echo(f"wrote {artifacts[key]}")
    for figure in artifacts["figures"]:
        click.echo(f"wrote {figure}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="theoremsearch", standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except ProviderError as exc:
        click.echo(f"provider error: {exc}", err=True)
        return 3
    except EngineFailure as exc:
        cause = exc.__cause__
        code = 3 if isinstance(cause, ProviderError) else 2
        click.echo(f"engine failure: {exc}", err=True)
        return code
    except (
        StaleStageError,
        BenchmarkFormatError,
        DataError,
        ValueError,
        KeyError,
        OSError,
    ) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
