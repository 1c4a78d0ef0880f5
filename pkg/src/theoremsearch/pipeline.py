"""Query-time search pipeline.

A raw query is optionally augmented by a text-generation provider into a
formal statement plus a precise informal restatement, formatted to mirror
the corpus document shape, wrapped in the query-side instruction, embedded,
and run against the vector index. Augmentation is best-effort: any provider
or parse failure falls back to searching the raw query, never an error.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .corpus import TheoremRecord
from .embedding import (
    DEFAULT_PRESET,
    PRESETS,
    TRUNCATION_LIMIT,
    EmbeddingCache,
    PresetPair,
    apply_instruction,
    embed_batch,
    truncate_chars,
)
from .hnsw import HnswIndex
from .informalize import InformalPair, format_document, sanitize_name
from .providers import EmbeddingProvider, TextGenerationProvider

logger = logging.getLogger(__name__)

FORMAL_LABEL = "FORMAL:"
NAME_LABEL = "NAME:"
STATEMENT_LABEL = "STATEMENT:"

AUGMENTATION_PRINCIPLES = (
    "Be precise: expand the query into a complete, unambiguous mathematical statement.",
    "Write mathematical expressions in LaTeX.",
    "If the query is ambiguous, settle on the most standard mathematical reading and make it explicit.",
    "Keep the expansion mathematically equivalent to the original query; do not add or drop conditions.",
)

# Worked example pairs: (query, formal, name, statement).
AUGMENTATION_EXAMPLES = (
    (
        "Schroeder Bernstein Theorem",
        "theorem schroeder_bernstein {f : A → B} {g : B → A} "
        "(hf : Function.Injective f) (hg : Function.Injective g) : "
        "∃ h : A → B, Function.Bijective h",
        "Schroeder-Bernstein theorem",
        "If there exist injective maps $f : A \\to B$ and $g : B \\to A$ between the sets "
        "$A$ and $B$, then there exists a bijective map $h : A \\to B$.",
    ),
    (
        "(p \\rightarrow q) \\rightarrow (\\neg q \\rightarrow \\neg p)",
        "theorem contrapositive (p q : Prop) : (p → q) → (¬q → ¬p)",
        "Contrapositive of an implication",
        "If $p$ implies $q$, then not $q$ implies not $p$.",
    ),
)

AUGMENT_DIRECTIVE = (
    "Respond with exactly three labeled lines and nothing else:\n"
    "FORMAL: the statement in Lean 4 syntax\n"
    "NAME: a short descriptive title\n"
    "STATEMENT: the precise informal statement"
)


@dataclass(frozen=True)
class AugmentedQuery:
    original: str
    formal_statement: str
    informal_name: str
    informal_statement: str
    augmented: bool

    @classmethod
    def fallback(cls, query: str) -> "AugmentedQuery":
        return cls(
            original=query,
            formal_statement="",
            informal_name="",
            informal_statement=query,
            augmented=False,
        )


@dataclass(frozen=True)
class SearchResult:
    rank: int
    theorem: TheoremRecord
    informal: InformalPair | None
    score: float


@dataclass(frozen=True)
class SearchOutcome:
    query: AugmentedQuery
    results: list[SearchResult]


def build_augmentation_prompt(query: str) -> str:
    """Principles, worked examples, the output directive, then the query."""
    if not query:
        raise ValueError("query must be non-empty")
    parts = [
        "Rewrite a mathematical search query into a detailed statement carrying "
        "both a formal and an informal version. Follow these principles:",
    ]
    parts.extend(f"{i}. {principle}" for i, principle in enumerate(AUGMENTATION_PRINCIPLES, 1))
    parts.append("")
    for example_query, formal, name, statement in AUGMENTATION_EXAMPLES:
        parts.append(f"Query: {example_query}")
        parts.append(f"{FORMAL_LABEL} {formal}")
        parts.append(f"{NAME_LABEL} {name}")
        parts.append(f"{STATEMENT_LABEL} {statement}")
        parts.append("")
    parts.append(f"Query: {query}")
    parts.append("")
    parts.append(AUGMENT_DIRECTIVE)
    return "\n".join(parts)


_AUG_LABEL_PATTERN = re.compile(
    r"^[ \t]*(FORMAL|NAME|STATEMENT):[ \t]*", re.IGNORECASE | re.MULTILINE
)


def parse_augmentation(text: str) -> tuple[str, str, str] | None:
    """Extract the three labeled fields; None when any is missing or empty."""
    matches = list(_AUG_LABEL_PATTERN.finditer(text))
    fields: dict[str, str] = {}
    for i, match in enumerate(matches):
        label = match.group(1).upper()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        if label not in fields:
            fields[label] = text[match.end() : end].strip()
    formal = fields.get("FORMAL", "")
    name = sanitize_name(fields.get("NAME", ""))
    statement = " ".join(fields.get("STATEMENT", "").split("\n")).strip()
    if not formal or not name or not statement:
        return None
    return formal, name, statement


def augment_query(query: str, provider: TextGenerationProvider | None) -> AugmentedQuery:
    """Best-effort query expansion; every failure path degrades to the raw query."""
    if provider is None:
        return AugmentedQuery.fallback(query)
    try:
        raw = provider.generate(build_augmentation_prompt(query))
    except Exception as exc:
        logger.warning("query augmentation failed, searching raw query: %s", exc)
        return AugmentedQuery.fallback(query)
    parsed = parse_augmentation(raw)
    if parsed is None:
        logger.warning("augmentation response unparseable, searching raw query")
        return AugmentedQuery.fallback(query)
    formal, name, statement = parsed
    return AugmentedQuery(
        original=query,
        formal_statement=formal,
        informal_name=name,
        informal_statement=statement,
        augmented=True,
    )


def format_query_document(aq: AugmentedQuery) -> str:
    """Mirror the corpus document shape; unaugmented queries pass through."""
    if not aq.augmented:
        return aq.original
    return f"{aq.formal_statement}\n{aq.informal_name}:{aq.informal_statement}"


def prepare_document_text(
    record: TheoremRecord, pair: InformalPair | None, preset: PresetPair
) -> str:
    """Corpus-side text as embedded: formatted, instructed, truncated."""
    document = format_document(record, pair, preset.doc_mode)
    return truncate_chars(apply_instruction(preset.doc, document), TRUNCATION_LIMIT)


def prepare_query_text(aq: AugmentedQuery, preset: PresetPair) -> str:
    """Query-side text as embedded: formatted, instructed, truncated."""
    document = format_query_document(aq)
    return truncate_chars(apply_instruction(preset.query, document), TRUNCATION_LIMIT)


def resolve_preset(preset: str | PresetPair) -> PresetPair:
    if isinstance(preset, PresetPair):
        return preset
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; valid: {sorted(PRESETS)}")
    return PRESETS[preset]


class SearchEngine:
    """Immutable bundle of corpus, informal pairs, index, and providers."""

    def __init__(
        self,
        records: Iterable[TheoremRecord] | Mapping[str, TheoremRecord],
        pairs: Mapping[str, InformalPair],
        index: HnswIndex,
        embedding_provider: EmbeddingProvider,
        augmentation_provider: TextGenerationProvider | None = None,
        preset: str | PresetPair = DEFAULT_PRESET,
        cache: EmbeddingCache | None = None,
    ):
        if isinstance(records, Mapping):
            self.records: dict[str, TheoremRecord] = dict(records)
        else:
            self.records = {r.id: r for r in records}
        self.pairs = dict(pairs)
        self.index = index
        self.preset = resolve_preset(preset)
        self._embedding_provider = embedding_provider
        self._augmentation_provider = augmentation_provider
        self._cache = cache
        missing = [id for id in index.ids if id not in self.records]
        if missing:
            preview = ", ".join(missing[:5])
            raise ValueError(
                f"index references {len(missing)} ids absent from the corpus: {preview}"
            )

    def run_search(
        self, query: str, k: int = 20, augment: bool = True, ef: int | None = None
    ) -> SearchOutcome:
        """Augment, format, embed, search, and join hits back to records.

        Augmentation failures fall back silently; embedding failures and
        corpus/index skew surface as errors.
        """
        if not query.strip():
            raise ValueError("query must be non-empty")
        if k < 1:
            raise ValueError("k must be >= 1")
        if augment:
            aq = augment_query(query, self._augmentation_provider)
        else:
            aq = AugmentedQuery.fallback(query)
        text = prepare_query_text(aq, self.preset)
        vector = embed_batch(
            [text], self._embedding_provider, cache=self._cache, preset_id=self.preset.preset_id
        )[0]
        hits = self.index.search(vector.values, k=k, ef=ef)
        results = []
        for rank, hit in enumerate(hits, start=1):
            record = self.records.get(hit.id)
            if record is None:
                raise KeyError(
                    f"index hit {hit.id!r} is not in the corpus (index/corpus version skew)"
                )
            results.append(
                SearchResult(rank=rank, theorem=record, informal=self.pairs.get(hit.id), score=hit.score)
            )
        return SearchOutcome(query=aq, results=results)
