"""Retrieval benchmark: labeled query groups, an engine runner, and report
aggregation.

Queries come in groups that share one relevance-label map, so every query in
a group is scored against the same judgments. Each group mixes phrasings of
the same underlying need across distinct categories, which is what makes the
per-category breakdown meaningful.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

from .metrics import (
    EXACT_LABEL,
    IDCG_MODES,
    RELEVANCE_SCALE,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
)

K_PRECISION = 10
K_RECALL = 10
K_NDCG = 20


class BenchmarkFormatError(ValueError):
    """Raised when a benchmark or run file violates the schema."""


class EngineFailure(RuntimeError):
    """Raised when the engine under evaluation fails; names the query."""

    def __init__(self, query_id: str, cause: BaseException | str):
        super().__init__(f"engine failed on query {query_id}: {cause}")
        self.query_id = query_id


class QueryCategory(enum.Enum):
    NATURAL_DESCRIPTION = "natural_description"
    LATEX_FORMULA = "latex_formula"
    THEOREM_NAME = "theorem_name"
    LEAN4_TERM = "lean4_term"

    @property
    def abbreviation(self) -> str:
        return _ABBREVIATIONS[self]


_ABBREVIATIONS = {
    QueryCategory.NATURAL_DESCRIPTION: "ND",
    QueryCategory.LATEX_FORMULA: "LF",
    QueryCategory.THEOREM_NAME: "TN",
    QueryCategory.LEAN4_TERM: "LT",
}


@dataclass(frozen=True)
class BenchmarkQuery:
    text: str
    category: QueryCategory


@dataclass
class QueryGroup:
    group_id: str
    queries: list[BenchmarkQuery]
    labels: dict[str, int]

    def validate(self) -> None:
        if not self.group_id:
            raise BenchmarkFormatError("group_id must be non-empty")
        if len(self.queries) < 2:
            raise BenchmarkFormatError(f"group {self.group_id}: needs at least 2 queries")
        categories = [q.category for q in self.queries]
        if len(set(categories)) != len(categories):
            raise BenchmarkFormatError(f"group {self.group_id}: duplicate query categories")
        for q in self.queries:
            if not q.text.strip():
                raise BenchmarkFormatError(f"group {self.group_id}: empty query text")
        for theorem_id, label in self.labels.items():
            if label not in RELEVANCE_SCALE:
                raise BenchmarkFormatError(
                    f"group {self.group_id}: label {label!r} for {theorem_id} not in {sorted(RELEVANCE_SCALE)}"
                )
        if not any(label == EXACT_LABEL for label in self.labels.values()):
            raise BenchmarkFormatError(f"group {self.group_id}: no exact-match (label 2) entry")


def query_id(group: QueryGroup, query: BenchmarkQuery) -> str:
    return f"{group.group_id}:{query.category.value}"


def load_benchmark(path: str) -> list[QueryGroup]:
    """Read and validate a benchmark file.

    Format: {"groups": [{"group_id", "queries": [{"text", "category"}],
    "labels": [{"theorem_id", "label"}]}]}.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BenchmarkFormatError(f"invalid benchmark file: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("groups"), list):
        raise BenchmarkFormatError("benchmark file must contain a top-level 'groups' list")
    groups: list[QueryGroup] = []
    seen_ids: set[str] = set()
    for raw in data["groups"]:
        group = _parse_group(raw)
        if group.group_id in seen_ids:
            raise BenchmarkFormatError(f"duplicate group_id {group.group_id}")
        seen_ids.add(group.group_id)
        group.validate()
        groups.append(group)
    return groups


def _parse_group(raw: object) -> QueryGroup:
    if not isinstance(raw, dict):
        raise BenchmarkFormatError("each group must be an object")
    group_id = raw.get("group_id")
    if not isinstance(group_id, str):
        raise BenchmarkFormatError("group_id must be a string")
    queries_raw = raw.get("queries")
    labels_raw = raw.get("labels")
    if not isinstance(queries_raw, list) or not isinstance(labels_raw, list):
        raise BenchmarkFormatError(f"group {group_id}: queries and labels must be lists")
    queries = []
    for q in queries_raw:
        if not isinstance(q, dict) or not isinstance(q.get("text"), str):
            raise BenchmarkFormatError(f"group {group_id}: each query needs a text string")
        try:
            category = QueryCategory(q.get("category"))
        except ValueError:
            valid = sorted(c.value for c in QueryCategory)
            raise BenchmarkFormatError(
                f"group {group_id}: category {q.get('category')!r} not in {valid}"
            ) from None
        queries.append(BenchmarkQuery(text=q["text"], category=category))
    labels: dict[str, int] = {}
    for entry in labels_raw:
        if not isinstance(entry, dict) or not isinstance(entry.get("theorem_id"), str):
            raise BenchmarkFormatError(f"group {group_id}: each label needs a theorem_id string")
        theorem_id = entry["theorem_id"]
        label = entry.get("label")
        if not isinstance(label, int) or isinstance(label, bool):
            raise BenchmarkFormatError(f"group {group_id}: label for {theorem_id} must be an integer")
        if theorem_id in labels:
            raise BenchmarkFormatError(f"group {group_id}: duplicate theorem_id {theorem_id}")
        labels[theorem_id] = label
    return QueryGroup(group_id=group_id, queries=queries, labels=labels)


@dataclass
class QueryMetrics:
    query_id: str
    group_id: str
    category: QueryCategory
    text: str
    ranking: list[str]
    precision: float
    recall: float
    ndcg: float

    def values(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "ndcg": self.ndcg}


METRIC_NAMES = ("ndcg", "precision", "recall")


@dataclass
class MetricsReport:
    ks: dict[str, int]
    idcg_mode: str
    per_query: list[QueryMetrics]
    overall: dict[str, float] = field(init=False)
    per_category: dict[QueryCategory, dict[str, float]] = field(init=False)
    category_counts: dict[QueryCategory, int] = field(init=False)

    def __post_init__(self):
        self.overall = _means(self.per_query)
        self.per_category = {}
        self.category_counts = {}
        for category in QueryCategory:
            rows = [q for q in self.per_query if q.category is category]
            if rows:
                self.per_category[category] = _means(rows)
                self.category_counts[category] = len(rows)


def _means(rows: Sequence[QueryMetrics]) -> dict[str, float]:
    if not rows:
        return {name: 0.0 for name in METRIC_NAMES}
    return {name: sum(q.values()[name] for q in rows) / len(rows) for name in METRIC_NAMES}


def _score_rankings(
    rankings: Mapping[str, Sequence[str]],
    groups: Sequence[QueryGroup],
    ks: dict[str, int],
    idcg_mode: str,
) -> MetricsReport:
    per_query: list[QueryMetrics] = []
    for group in groups:
        for query in group.queries:
            qid = query_id(group, query)
            ranking = list(rankings[qid])
            if len(set(ranking)) != len(ranking):
                raise EngineFailure(qid, "ranking contains duplicate theorem ids")
            per_query.append(
                QueryMetrics(
                    query_id=qid,
                    group_id=group.group_id,
                    category=query.category,
                    text=query.text,
                    ranking=ranking,
                    precision=precision_at_k(ranking, group.labels, ks["precision"]),
                    recall=recall_at_k(ranking, group.labels, ks["recall"]),
                    ndcg=ndcg_at_k(ranking, group.labels, ks["ndcg"], idcg_mode=idcg_mode),
                )
            )
    return MetricsReport(ks=dict(ks), idcg_mode=idcg_mode, per_query=per_query)


def evaluate(
    engine: Callable[[str], Sequence[str]],
    groups: Sequence[QueryGroup],
    k_precision: int = K_PRECISION,
    k_recall: int = K_RECALL,
    k_ndcg: int = K_NDCG,
    idcg_mode: str = "retrieved",
) -> MetricsReport:
    """Run every query through the engine and aggregate the metrics.

    The engine maps query text to an ordered theorem-id list. Any exception
    it raises aborts the evaluation with the failing query identified.
    """
    if idcg_mode not in IDCG_MODES:
        raise ValueError(f"idcg_mode must be one of {IDCG_MODES}, got {idcg_mode!r}")
    rankings: dict[str, list[str]] = {}
    for group in groups:
        for query in group.queries:
            qid = query_id(group, query)
            try:
                rankings[qid] = list(engine(query.text))
            except Exception as exc:
                raise EngineFailure(qid, exc) from exc
    ks = {"precision": k_precision, "recall": k_recall, "ndcg": k_ndcg}
    return _score_rankings(rankings, groups, ks, idcg_mode)


def evaluate_rankings(
    rankings: Mapping[str, Sequence[str]],
    groups: Sequence[QueryGroup],
    k_precision: int = K_PRECISION,
    k_recall: int = K_RECALL,
    k_ndcg: int = K_NDCG,
    idcg_mode: str = "retrieved",
) -> MetricsReport:
    """Score precomputed rankings (offline run files) against the groups."""
    if idcg_mode not in IDCG_MODES:
        raise ValueError(f"idcg_mode must be one of {IDCG_MODES}, got {idcg_mode!r}")
    for group in groups:
        for query in group.queries:
            qid = query_id(group, query)
            if qid not in rankings:
                raise BenchmarkFormatError(f"run file missing ranking for query {qid}")
    ks = {"precision": k_precision, "recall": k_recall, "ndcg": k_ndcg}
    return _score_rankings(rankings, groups, ks, idcg_mode)


def load_runfile(path: str) -> dict[str, list[str]]:
    """Read an offline run file: {"rankings": {query_id: [theorem_id, ...]}}."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BenchmarkFormatError(f"invalid run file: {exc}") from exc
    rankings = data.get("rankings") if isinstance(data, dict) else None
    if not isinstance(rankings, dict):
        raise BenchmarkFormatError("run file must contain a top-level 'rankings' object")
    out: dict[str, list[str]] = {}
    for qid, ranking in rankings.items():
        if not isinstance(ranking, list) or not all(isinstance(t, str) for t in ranking):
            raise BenchmarkFormatError(f"ranking for {qid} must be a list of theorem ids")
        out[qid] = list(ranking)
    return out
