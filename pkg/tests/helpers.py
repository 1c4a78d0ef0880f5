"""Shared test fixtures: scripted providers, canonical records, mock-built engines."""

from __future__ import annotations

import json

from theoremsearch.corpus import DefRecord, TheoremRecord
from theoremsearch.embedding import MockEmbeddingProvider, embed_batch
from theoremsearch.hnsw import HnswIndex, HnswParams
from theoremsearch.informalize import InformalPair, PairRecord, informalize, prompt_hash
from theoremsearch.mocks import MockTextGenerationProvider
from theoremsearch.pipeline import SearchEngine, prepare_document_text, resolve_preset
from theoremsearch.providers import ProviderError


class ScriptedGenProvider:
    """Replays canned responses in order; records every prompt it saw."""

    def __init__(self, responses: list[str], provider_id: str = "scripted"):
        self.responses = list(responses)
        self.provider_id = provider_id
        self.prompts: list[str] = []

    def generate(self, prompt: str, *, temperature: float = 0.0, max_output_chars: int = 4096) -> str:
        self.prompts.append(prompt)
        if not self.responses:
            raise ProviderError("script exhausted")
        if len(self.responses) == 1:
            return self.responses[0]
        return self.responses.pop(0)


class FailingGenProvider:
    provider_id = "failing"

    def generate(self, prompt: str, *, temperature: float = 0.0, max_output_chars: int = 4096) -> str:
        raise ProviderError("provider unreachable")


# The worked informalization example: a decidable if-then-else equivalence.
DITE_FORMAL = (
    "theorem dite_eq_iff {α : Sort u_2} {P : Prop} [Decidable P] {c : α} "
    "{A : P → α} {B : ¬P → α} : dite P A B = c ↔ (∃ h, A h = c) ∨ ∃ h, B h = c"
)
DITE_GOLDEN_NAME = "Dependent if-then-else equivalence"
DITE_GOLDEN_STATEMENT = (
    "For any proposition P that is decidable, and any elements c, A, and B, the "
    "expression `if P then A else B' is equal to c if and only if either there "
    "exists a proof h such that A h is equal to c, or there exists a proof h "
    "such that B h is equal to c."
)


def dite_record() -> TheoremRecord:
    return TheoremRecord(
        id="dite_eq_iff",
        name="dite_eq_iff",
        formal_statement=DITE_FORMAL,
        docstring=None,
        dependencies=[
            DefRecord(
                name="dite",
                statement="def dite (c : Prop) [h : Decidable c] (t : c → α) (e : ¬c → α) : α",
                docstring="Dependent if-then-else, a version of if-then-else whose branches may use the condition.",
            )
        ],
        source_path="Mathlib/Logic/Basic.lean",
        kind="theorem",
    )


def collapse_ws(text: str) -> str:
    return " ".join(text.split())


def make_corpus() -> list[TheoremRecord]:
    statements = [
        ("Topology.union_open", "the union of a family of open sets is open"),
        ("Topology.compact_closed", "a compact subset of a hausdorff space is closed"),
        ("Algebra.add_comm", "addition of natural numbers is commutative"),
        ("Algebra.ker_normal", "the kernel of a group homomorphism is a normal subgroup"),
        ("Analysis.ivt", "a continuous function attains every intermediate value"),
        ("Analysis.mvt", "a differentiable function attains its mean slope somewhere"),
        ("Order.zorn", "a chain-complete partial order contains a maximal element"),
        ("Logic.contrapose", "an implication entails its contrapositive"),
        ("Nat.prime_infinite", "there are infinitely many prime numbers"),
        ("Set.cantor", "no surjection exists from a set onto its power set"),
        ("Cat.yoneda", "natural transformations from a hom functor classify elements"),
        ("Prob.borel_cantelli", "summable event probabilities force finitely many occurrences"),
    ]
    return [
        TheoremRecord(id=name, name=name, formal_statement=f"theorem {name.split('.')[1]} : {text}")
        for name, text in statements
    ]


_ADJECTIVES = [
    "continuous", "compact", "measurable", "bounded", "convex", "monotone",
    "analytic", "uniform", "dense", "closed", "nilpotent", "finite",
]
_NOUNS = [
    "function", "lattice", "manifold", "group", "ring", "filter",
    "sequence", "operator", "metric", "category", "graph", "module",
]
_VERBS = [
    "preserves", "refines", "dominates", "factors through", "commutes with",
    "extends", "approximates", "generates", "splits", "embeds into",
]
_OBJECTS = [
    "products", "colimits", "suprema", "norms", "kernels",
    "closures", "fibers", "quotients", "duals", "ideals",
]


def synthetic_records(n: int) -> list[TheoremRecord]:
    """n theorems with pairwise distinct statement vocabulary."""
    records = []
    for i in range(n):
        phrase = (
            f"the {_ADJECTIVES[i % 12]} {_NOUNS[(i // 12) % 12]} "
            f"{_VERBS[(i // 144) % 10]} {_OBJECTS[(i // 1440) % 10]}"
        )
        name = f"Synthetic.thm_{i:04d}"
        records.append(
            TheoremRecord(
                id=name,
                name=name,
                formal_statement=f"theorem thm_{i:04d} : variant {i:04d} asserts {phrase}",
                source_path=f"Synthetic/Block{i // 100}.lean",
            )
        )
    return records


def build_mock_engine(
    records: list[TheoremRecord] | None = None,
    dim: int = 64,
    seed: int = 11,
    preset: str = "bilingual",
    with_augmenter: bool = True,
):
    """Informalize with the mock generator, embed with the mock embedder,
    index, and return (records, pairs, engine)."""
    if records is None:
        records = make_corpus()
    gen = MockTextGenerationProvider()
    pairs = {r.id: informalize(r, gen) for r in records}
    embedder = MockEmbeddingProvider(dim=dim)
    pair_preset = resolve_preset(preset)
    texts = [prepare_document_text(r, pairs[r.id], pair_preset) for r in records]
    index = HnswIndex(dim=dim, params=HnswParams(seed=seed))
    for record, vec in zip(records, embed_batch(texts, embedder, preset_id=pair_preset.preset_id)):
        index.insert(record.id, vec.values)
    engine = SearchEngine(
        records,
        pairs,
        index,
        embedder,
        augmentation_provider=gen if with_augmenter else None,
        preset=preset,
    )
    return records, pairs, engine


def write_corpus_file(path: str, records: list[TheoremRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            line = {
                "id": r.id,
                "name": r.name,
                "kind": r.kind,
                "statement": r.statement_markup or r.formal_statement,
            }
            if r.docstring is not None:
                line["docstring"] = r.docstring
            if r.source_path:
                line["source_path"] = r.source_path
            fh.write(json.dumps(line, ensure_ascii=False) + "\n")


def write_pairs_file(path: str, pairs: dict[str, InformalPair], provider_id: str = "mock-gen") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tid in sorted(pairs):
            pair = pairs[tid]
            record = PairRecord(
                theorem_id=tid,
                informal_name=pair.informal_name,
                informal_statement=pair.informal_statement,
                provider_id=provider_id,
                prompt_hash=prompt_hash(provider_id, tid),
            )
            fh.write(record.to_json() + "\n")
