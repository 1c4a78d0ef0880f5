"""Okapi BM25 lexical retrieval baseline.

Tokenization is deliberately plain: lowercase, split on non-alphanumeric
runs, no stemming. Scores use idf = ln(1 + (N - n + 0.5) / (n + 0.5)), which
stays non-negative for terms present in most documents.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from collections.abc import Mapping, Sequence

from .hnsw import SearchHit

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


class Bm25Index:
    """Inverted-statistics index over a fixed document collection."""

    def __init__(self, documents: Mapping[str, str], k1: float = DEFAULT_K1, b: float = DEFAULT_B):
        if not documents:
            raise ValueError("empty corpus")
        if k1 < 0 or not 0 <= b <= 1:
            raise ValueError("k1 must be >= 0 and b within [0, 1]")
        self.k1 = k1
        self.b = b
        # Sorted once so every downstream ordering is id-deterministic.
        self._ids = sorted(documents)
        self._pos = {id: i for i, id in enumerate(self._ids)}
        self._tf: list[Counter[str]] = []
        self._lengths: list[int] = []
        self._df: Counter[str] = Counter()
        for id in self._ids:
            tokens = tokenize(documents[id])
            counts = Counter(tokens)
            self._tf.append(counts)
            self._lengths.append(len(tokens))
            self._df.update(counts.keys())
        self._n_docs = len(self._ids)
        total = sum(self._lengths)
        self._avgdl = total / self._n_docs if total else 1.0

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def _idf(self, term: str) -> float:
        n = self._df.get(term, 0)
        return math.log(1 + (self._n_docs - n + 0.5) / (n + 0.5))

    def score(self, query: str, doc_id: str) -> float:
        if doc_id not in self._pos:
            raise KeyError(doc_id)
        return self._score_doc(tokenize(query), self._pos[doc_id])

    def _score_doc(self, query_tokens: Sequence[str], pos: int) -> float:
        tf = self._tf[pos]
        norm = self.k1 * (1 - self.b + self.b * self._lengths[pos] / self._avgdl)
        total = 0.0
        # Each query-token occurrence contributes, so repeated terms weigh more.
        for token in query_tokens:
            count = tf.get(token, 0)
            if not count:
                continue
            denom = count + norm
            if denom:
                total += self._idf(token) * count * (self.k1 + 1) / denom
        return total

    def search(self, query: str, k: int) -> list[SearchHit]:
        """Top-k documents by BM25 score; ties and zero scores order by id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        query_tokens = tokenize(query)
        scored = [
            (-self._score_doc(query_tokens, pos), self._ids[pos])
            for pos in range(self._n_docs)
        ]
        scored.sort()
        return [SearchHit(id=id, score=-neg) for neg, id in scored[:k]]


def bm25_search(
    documents: Mapping[str, str],
    query: str,
    k: int,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> list[SearchHit]:
    """One-shot convenience wrapper over Bm25Index."""
    return Bm25Index(documents, k1=k1, b=b).search(query, k)
