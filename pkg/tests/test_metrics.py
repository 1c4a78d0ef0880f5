import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from theoremsearch.metrics import (
    RELEVANCE_SCALE,
    dcg_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
)
from tests.oracles import ref_dcg, ref_ndcg_global, ref_ndcg_retrieved, ref_precision, ref_recall


def make_case(ranked_labels, extra_labels=()):
    """Positional label list -> (ranking ids, label map). None = unlabeled."""
    ranking = [f"d{i}" for i in range(len(ranked_labels))]
    labels = {f"d{i}": lab for i, lab in enumerate(ranked_labels) if lab is not None}
    for j, lab in enumerate(extra_labels):
        labels[f"x{j}"] = lab
    return ranking, labels


class TestPrecision:
    def test_two_exact_in_ten(self):
        ranking, labels = make_case([2, 1, 2, 0, 0, 0, 0, 0, 0, 0])
        assert precision_at_k(ranking, labels, 10) == pytest.approx(0.2)

    def test_no_exact(self):
        ranking, labels = make_case([1, 1, 0])
        assert precision_at_k(ranking, labels, 3) == 0.0

    def test_all_exact(self):
        ranking, labels = make_case([2, 2, 2])
        assert precision_at_k(ranking, labels, 3) == 1.0

    def test_short_ranking_counts_misses(self):
        ranking, labels = make_case([2])
        assert precision_at_k(ranking, labels, 10) == pytest.approx(0.1)

    def test_unlabeled_is_miss(self):
        assert precision_at_k(["unknown"], {"a": 2}, 1) == 0.0

    def test_bad_k(self):
        with pytest.raises(ValueError):
            precision_at_k(["a"], {"a": 2}, 0)


class TestRecall:
    def test_half_of_four(self):
        ranking, labels = make_case([2, 0, 2, 0, 0, 0, 0, 0, 0, 0], extra_labels=[2, 2])
        assert recall_at_k(ranking, labels, 10) == pytest.approx(0.5)

    def test_all_retrieved(self):
        ranking, labels = make_case([2, 2, 1])
        assert recall_at_k(ranking, labels, 3) == 1.0

    def test_none_retrieved(self):
        ranking, labels = make_case([0, 1], extra_labels=[2])
        assert recall_at_k(ranking, labels, 2) == 0.0

    def test_no_exact_labels_gives_zero(self):
        ranking, labels = make_case([1, 0])
        assert recall_at_k(ranking, labels, 2) == 0.0


class TestDcg:
    def test_spot_value(self):
        ranking, labels = make_case([2, 1, 0])
        assert dcg_at_k(ranking, labels, 3) == pytest.approx(1.1892789260714371, abs=1e-9)

    def test_all_zero(self):
        ranking, labels = make_case([0, 0, 0])
        assert dcg_at_k(ranking, labels, 3) == 0.0

    def test_single_exact_rank_one(self):
        ranking, labels = make_case([2])
        assert dcg_at_k(ranking, labels, 1) == pytest.approx(1.0)

    def test_positions_beyond_length_contribute_zero(self):
        ranking, labels = make_case([2, 1])
        assert dcg_at_k(ranking, labels, 10) == dcg_at_k(ranking, labels, 2)

    def test_custom_scale(self):
        ranking, labels = make_case([1])
        assert dcg_at_k(ranking, labels, 1, scale={1: 0.5}) == pytest.approx(0.5)


class TestNdcg:
    def test_ideal_order_is_one(self):
        ranking, labels = make_case([2, 1, 0])
        assert ndcg_at_k(ranking, labels, 3) == 1.0

    def test_spot_value(self):
        ranking, labels = make_case([0, 2, 1])
        assert ndcg_at_k(ranking, labels, 3) == pytest.approx(0.6566413786134381, abs=1e-9)

    def test_nothing_relevant_is_zero(self):
        ranking, labels = make_case([0, 0])
        assert ndcg_at_k(ranking, labels, 2) == 0.0

    def test_global_mode_counts_missed_items(self):
        ranking, labels = make_case([0, 1, 2], extra_labels=[2])
        retrieved = ndcg_at_k(ranking, labels, 3, idcg_mode="retrieved")
        global_ = ndcg_at_k(ranking, labels, 3, idcg_mode="global")
        assert global_ == pytest.approx(0.3870331913368086, abs=1e-9)
        assert global_ < retrieved

    def test_bad_mode(self):
        with pytest.raises(ValueError, match="idcg_mode"):
            ndcg_at_k(["a"], {"a": 2}, 1, idcg_mode="both")


ORACLE_CASES = [
    [2, 1, 0],
    [0, 2, 1],
    [1, 2],
    [2],
    [0, 0, 0],
    [2, 2, 2],
    [1, 0, 0, 2],
    [2, 2, 1, 0, 2],
    [0] * 10 + [2],
    [2, 1] * 5,
    [1, 1, 1],
    [2, 0, 2, 0, 1],
]


class TestOracleAgreement:
    @pytest.mark.parametrize("ranked_labels", ORACLE_CASES, ids=lambda c: "".join(map(str, c)))
    @pytest.mark.parametrize("k", [1, 3, 10])
    def test_matches_reference(self, ranked_labels, k):
        ranking, labels = make_case(ranked_labels)
        assert dcg_at_k(ranking, labels, k) == pytest.approx(ref_dcg(ranked_labels, k), abs=1e-9)
        assert ndcg_at_k(ranking, labels, k) == pytest.approx(
            ref_ndcg_retrieved(ranked_labels, k), abs=1e-9
        )
        assert precision_at_k(ranking, labels, k) == pytest.approx(
            ref_precision(ranked_labels, k), abs=1e-9
        )
        sigma = sum(1 for lab in ranked_labels if lab == 2)
        if sigma:
            assert recall_at_k(ranking, labels, k) == pytest.approx(
                ref_recall(ranked_labels, k, sigma), abs=1e-9
            )
        else:
            assert recall_at_k(ranking, labels, k) == 0.0

    def test_global_mode_matches_reference(self):
        for ranked_labels, extra in [([0, 1, 2], [2]), ([2, 1], [2, 2, 1]), ([1], [2])]:
            ranking, labels = make_case(ranked_labels, extra_labels=extra)
            assert ndcg_at_k(ranking, labels, 5, idcg_mode="global") == pytest.approx(
                ref_ndcg_global(ranked_labels, ranked_labels + extra, 5), abs=1e-9
            )


label_lists = st.lists(st.sampled_from([0, 1, 2]), min_size=1, max_size=30)


class TestProperties:
    @given(ranked_labels=label_lists, k=st.integers(1, 35))
    def test_bounded(self, ranked_labels, k):
        ranking, labels = make_case(ranked_labels)
        assert 0.0 <= precision_at_k(ranking, labels, k) <= 1.0
        assert 0.0 <= recall_at_k(ranking, labels, k) <= 1.0
        assert 0.0 <= ndcg_at_k(ranking, labels, k) <= 1.0 + 1e-12

    @given(ranked_labels=label_lists, k=st.integers(1, 35), seed=st.integers(0, 2**16))
    def test_permutation_below_k_is_invisible(self, ranked_labels, k, seed):
        ranking, labels = make_case(ranked_labels)
        tail = ranking[k:]
        random.Random(seed).shuffle(tail)
        shuffled = ranking[:k] + tail
        assert precision_at_k(shuffled, labels, k) == precision_at_k(ranking, labels, k)
        assert recall_at_k(shuffled, labels, k) == recall_at_k(ranking, labels, k)
        assert dcg_at_k(shuffled, labels, k) == dcg_at_k(ranking, labels, k)
        assert ndcg_at_k(shuffled, labels, k) == ndcg_at_k(ranking, labels, k)

    @given(ranked_labels=label_lists, k=st.integers(1, 35))
    def test_perfect_ndcg_iff_sorted(self, ranked_labels, k):
        ranking, labels = make_case(ranked_labels)
        value = ndcg_at_k(ranking, labels, k)
        gains = [RELEVANCE_SCALE[lab] for lab in ranked_labels]
        if not any(gains[:k]):
            assert value == 0.0
        elif sorted(ranked_labels, reverse=True) == ranked_labels:
            assert value == 1.0
        elif k >= len(ranked_labels):
            # With the whole list in scope, any inversion strictly loses.
            assert value < 1.0
        else:
            assert value <= 1.0

    @given(ranked_labels=label_lists, k=st.integers(1, 35))
    def test_exact_count_bounded_by_k_and_sigma(self, ranked_labels, k):
        ranking, labels = make_case(ranked_labels)
        sigma = sum(1 for lab in ranked_labels if lab == 2)
        retrieved_exact = precision_at_k(ranking, labels, k) * k
        assert retrieved_exact <= min(k, sigma) + 1e-9
