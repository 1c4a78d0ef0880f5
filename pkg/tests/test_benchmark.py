import csv
import json

import pytest

from theoremsearch.benchmark import (
    BenchmarkFormatError,
    EngineFailure,
    MetricsReport,
    QueryCategory,
    evaluate,
    evaluate_rankings,
    load_benchmark,
    load_runfile,
    query_id,
)
from theoremsearch.report import write_report
from tests.oracles import ref_ndcg_retrieved, ref_precision, ref_recall

FIXTURE = {
    "groups": [
        {
            "group_id": "g1",
            "queries": [
                {"text": "natural query one", "category": "natural_description"},
                {"text": "name query one", "category": "theorem_name"},
            ],
            "labels": [
                {"theorem_id": "t1", "label": 2},
                {"theorem_id": "t2", "label": 1},
                {"theorem_id": "t3", "label": 0},
            ],
        },
        {
            "group_id": "g2",
            "queries": [
                {"text": "natural query two", "category": "natural_description"},
                {"text": "formula query two", "category": "latex_formula"},
            ],
            "labels": [
                {"theorem_id": "t4", "label": 2},
                {"theorem_id": "t5", "label": 2},
                {"theorem_id": "t6", "label": 1},
            ],
        },
    ]
}

RANKINGS = {
    "natural query one": ["t1", "t2", "t3"],
    "name query one": ["t2", "t1"],
    "natural query two": ["t4", "t6", "t5"],
    "formula query two": ["t9", "t5"],
}

# Positional labels matching RANKINGS under each group's label map.
RANKED_LABELS = {
    "g1:natural_description": ([2, 1, 0], 1),
    "g1:theorem_name": ([1, 2], 1),
    "g2:natural_description": ([2, 1, 2], 2),
    "g2:latex_formula": ([0, 2], 2),
}


def write_fixture(tmp_path, payload=FIXTURE):
    path = tmp_path / "benchmark.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def static_engine(text):
    return RANKINGS[text]


class TestLoadBenchmark:
    def test_round_trip(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        assert [g.group_id for g in groups] == ["g1", "g2"]
        assert sum(len(g.queries) for g in groups) == 4
        assert groups[0].queries[0].category is QueryCategory.NATURAL_DESCRIPTION
        assert groups[1].labels == {"t4": 2, "t5": 2, "t6": 1}

    @pytest.mark.parametrize(
        "mutate,fragment",
        [
            (lambda d: d["groups"][0]["queries"].pop(), "at least 2"),
            (
                lambda d: d["groups"][0]["queries"].__setitem__(
                    1, {"text": "x", "category": "natural_description"}
                ),
                "duplicate query categories",
            ),
            (
                lambda d: d["groups"][0]["labels"].__setitem__(0, {"theorem_id": "t1", "label": 1}),
                "no exact-match",
            ),
            (
                lambda d: d["groups"][0]["labels"].append({"theorem_id": "t1", "label": 2}),
                "duplicate theorem_id",
            ),
            (
                lambda d: d["groups"][0]["labels"].append({"theorem_id": "t9", "label": 7}),
                "label 7",
            ),
            (
                lambda d: d["groups"][0]["queries"].__setitem__(0, {"text": "x", "category": "prose"}),
                "category",
            ),
            (lambda d: d["groups"].append(dict(d["groups"][0])), "duplicate group_id"),
            (lambda d: d.pop("groups"), "groups"),
        ],
    )
    def test_rejects_invalid_files(self, tmp_path, mutate, fragment):
        payload = json.loads(json.dumps(FIXTURE))
        mutate(payload)
        with pytest.raises(BenchmarkFormatError, match=fragment):
            load_benchmark(write_fixture(tmp_path, payload))

    def test_rejects_garbage_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(BenchmarkFormatError, match="invalid benchmark file"):
            load_benchmark(str(path))

    def test_rejects_boolean_label(self, tmp_path):
        payload = json.loads(json.dumps(FIXTURE))
        payload["groups"][0]["labels"][0]["label"] = True
        with pytest.raises(BenchmarkFormatError, match="integer"):
            load_benchmark(write_fixture(tmp_path, payload))


class TestCategories:
    def test_abbreviations(self):
        assert [c.abbreviation for c in QueryCategory] == ["ND", "LF", "TN", "LT"]

    def test_query_id_format(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        assert query_id(groups[0], groups[0].queries[0]) == "g1:natural_description"


class TestEvaluate:
    def test_hand_computed_means(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        report = evaluate(static_engine, groups)
        assert len(report.per_query) == 4
        expected = {}
        for qid, (labels, sigma) in RANKED_LABELS.items():
            expected[qid] = {
                "ndcg": ref_ndcg_retrieved(labels, 20),
                "precision": ref_precision(labels, 10),
                "recall": ref_recall(labels, 10, sigma),
            }
        for q in report.per_query:
            for name, value in q.values().items():
                assert value == pytest.approx(expected[q.query_id][name], abs=1e-9), (
                    q.query_id,
                    name,
                )
        for name in ("ndcg", "precision", "recall"):
            mean = sum(v[name] for v in expected.values()) / len(expected)
            assert report.overall[name] == pytest.approx(mean, abs=1e-9)

    def test_per_category_means_and_counts(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        report = evaluate(static_engine, groups)
        nd = QueryCategory.NATURAL_DESCRIPTION
        assert report.category_counts[nd] == 2
        assert report.category_counts[QueryCategory.THEOREM_NAME] == 1
        assert QueryCategory.LEAN4_TERM not in report.per_category
        nd_expected = (
            ref_ndcg_retrieved([2, 1, 0], 20) + ref_ndcg_retrieved([2, 1, 2], 20)
        ) / 2
        assert report.per_category[nd]["ndcg"] == pytest.approx(nd_expected, abs=1e-9)

    def test_overall_is_mean_of_per_query(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        report = evaluate(static_engine, groups)
        for name in ("ndcg", "precision", "recall"):
            mean = sum(q.values()[name] for q in report.per_query) / len(report.per_query)
            assert report.overall[name] == pytest.approx(mean, abs=1e-12)

    def test_perfect_engine_scores_one(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        by_text = {
            q.text: sorted(g.labels, key=lambda t: (-g.labels[t], t))
            for g in groups
            for q in g.queries
        }
        report = evaluate(lambda text: by_text[text], groups)
        assert all(q.ndcg == 1.0 for q in report.per_query)
        assert report.overall["recall"] == 1.0

    def test_empty_rankings_score_zero(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        report = evaluate(lambda text: [], groups)
        assert report.overall == {"ndcg": 0.0, "precision": 0.0, "recall": 0.0}

    def test_group_label_inheritance(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        report = evaluate(lambda text: ["t1", "t2", "t3"], groups[:1])
        first, second = report.per_query
        assert first.values() == second.values()

    def test_engine_failure_names_query(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))

        def engine(text):
            if text == "name query one":
                raise ValueError("backend down")
            return []

        with pytest.raises(EngineFailure, match="g1:theorem_name"):
            evaluate(engine, groups)

    def test_duplicate_ids_in_ranking_rejected(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        with pytest.raises(EngineFailure, match="duplicate"):
            evaluate(lambda text: ["t1", "t1"], groups)

    def test_bad_idcg_mode(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        with pytest.raises(ValueError, match="idcg_mode"):
            evaluate(static_engine, groups, idcg_mode="nope")


class TestRunfiles:
    def test_round_trip(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        rankings = {
            query_id(g, q): RANKINGS[q.text] for g in groups for q in g.queries
        }
        run_path = tmp_path / "run.json"
        run_path.write_text(json.dumps({"rankings": rankings}), encoding="utf-8")
        loaded = load_runfile(str(run_path))
        report = evaluate_rankings(loaded, groups)
        direct = evaluate(static_engine, groups)
        assert report.overall == direct.overall

    def test_missing_query_detected(self, tmp_path):
        groups = load_benchmark(write_fixture(tmp_path))
        with pytest.raises(BenchmarkFormatError, match="g1:theorem_name"):
            evaluate_rankings({"g1:natural_description": ["t1"]}, groups)

    def test_rejects_malformed_runfile(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"rankings": {"q": [1, 2]}}), encoding="utf-8")
        with pytest.raises(BenchmarkFormatError, match="list of theorem ids"):
            load_runfile(str(path))
        path.write_text(json.dumps([]), encoding="utf-8")
        with pytest.raises(BenchmarkFormatError, match="rankings"):
            load_runfile(str(path))


class TestReportRendering:
    @pytest.fixture()
    def report(self, tmp_path) -> MetricsReport:
        groups = load_benchmark(write_fixture(tmp_path))
        return evaluate(static_engine, groups)

    def test_writes_all_artifacts(self, report, tmp_path):
        out = write_report(report, str(tmp_path / "out"))
        paths = [out["table"], out["queries"], out["summary"], *out["figures"]]
        assert len(out["figures"]) == 2
        import os

        for path in paths:
            assert os.path.exists(path)

    def test_table_matches_report(self, report, tmp_path):
        out = write_report(report, str(tmp_path / "out"))
        with open(out["table"], newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["scope", "n_queries", "ndcg@20", "precision@10", "recall@10"]
        overall = rows[1]
        assert overall[0] == "overall"
        assert overall[1] == "4"
        assert float(overall[2]) == pytest.approx(report.overall["ndcg"], abs=1e-6)
        scopes = [r[0] for r in rows[1:]]
        assert "natural_description" in scopes
        assert "lean4_term" not in scopes

    def test_queries_table_has_one_row_per_query(self, report, tmp_path):
        out = write_report(report, str(tmp_path / "out"))
        with open(out["queries"], newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + len(report.per_query)
        assert rows[0][-1] == "text"

    def test_summary_mentions_scopes_and_counts(self, report, tmp_path):
        out = write_report(report, str(tmp_path / "out"))
        with open(out["summary"], encoding="utf-8") as fh:
            text = fh.read()
        assert "4 queries across 2 groups" in text
        assert "overall" in text
        assert "natural_description" in text

    def test_figures_are_png(self, report, tmp_path):
        out = write_report(report, str(tmp_path / "out"))
        for figure in out["figures"]:
            with open(figure, "rb") as fh:
                blob = fh.read()
            assert blob.startswith(b"\x89PNG\r\n")
            assert len(blob) > 1000
