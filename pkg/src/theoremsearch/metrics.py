"""Graded-relevance ranking metrics.

Labels grade each theorem 2 (exact match or stronger statement), 1 (related),
or 0 (irrelevant); anything absent from the label map counts as irrelevant.
Precision and recall count only exact matches, while DCG credits partial
relevance through the gain scale.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence

EXACT_LABEL = 2

# label -> gain
RELEVANCE_SCALE: dict[int, float] = {2: 1.0, 1: 0.3, 0: 0.0}

IDCG_MODES = ("retrieved", "global")


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")


def _gain(label: int | None, scale: Mapping[int, float]) -> float:
    if label is None:
        return 0.0
    return scale.get(label, 0.0)


def precision_at_k(ranking: Sequence[str], labels: Mapping[str, int], k: int) -> float:
    """Fraction of the top k positions holding an exact match.

    Positions beyond the ranking length count as misses, so short rankings
    are not advantaged.
    """
    _check_k(k)
    hits = sum(1 for id in ranking[:k] if labels.get(id) == EXACT_LABEL)
    return hits / k


def recall_at_k(ranking: Sequence[str], labels: Mapping[str, int], k: int) -> float:
    """Fraction of the labeled exact matches retrieved in the top k."""
    _check_k(k)
    sigma = sum(1 for label in labels.values() if label == EXACT_LABEL)
    if sigma == 0:
        return 0.0
    hits = sum(1 for id in ranking[:k] if labels.get(id) == EXACT_LABEL)
    return hits / sigma


def dcg_at_k(
    ranking: Sequence[str],
    labels: Mapping[str, int],
    k: int,
    scale: Mapping[int, float] = RELEVANCE_SCALE,
) -> float:
    """Position-discounted gain: sum of gain(rank j) / log2(j + 1)."""
    _check_k(k)
    total = 0.0
    for j, id in enumerate(ranking[:k], start=1):
        total += _gain(labels.get(id), scale) / math.log2(j + 1)
    return total


def ndcg_at_k(
    ranking: Sequence[str],
    labels: Mapping[str, int],
    k: int,
    scale: Mapping[int, float] = RELEVANCE_SCALE,
    idcg_mode: str = "retrieved",
) -> float:
    """DCG normalized by the ideal arrangement's DCG.

    idcg_mode "retrieved" rearranges the retrieved list itself (a ranking
    that returned the right items in the wrong order can still reach 1);
    "global" rearranges every labeled item, so missing relevant theorems
    also costs score. An ideal of zero yields 0.
    """
    _check_k(k)
    if idcg_mode not in IDCG_MODES:
        raise ValueError(f"idcg_mode must be one of {IDCG_MODES}, got {idcg_mode!r}")
    if idcg_mode == "retrieved":
        gains = sorted((_gain(labels.get(id), scale) for id in ranking), reverse=True)
    else:
        gains = sorted((_gain(label, scale) for label in labels.values()), reverse=True)
    idcg = 0.0
    for j, g in enumerate(gains[:k], start=1):
        idcg += g / math.log2(j + 1)
    if idcg == 0.0:
        return 0.0
    return dcg_at_k(ranking, labels, k, scale) / idcg
