"""Stage manifest hashing, persistence, and chain verification."""

import json

import pytest

from theoremsearch.manifest import (
    STAGES,
    Manifest,
    StaleStageError,
    combine_hashes,
    file_hash,
)


def touch(path, content: str) -> str:
    path.write_text(content, encoding="utf-8")
    return str(path)


def stage_chain(tmp_path) -> tuple[Manifest, dict]:
    """Record all four stages over real files, returning (manifest, paths)."""
    manifest = Manifest(str(tmp_path / "manifest.json"))
    paths = {}
    upstream = file_hash(touch(tmp_path / "source.jsonl", "raw"))
    for stage in STAGES:
        out = touch(tmp_path / f"{stage}.out", f"{stage} artifact")
        settings = {"stage": stage}
        entry = manifest.record(
            stage, combine_hashes(upstream, settings=settings), out, settings
        )
        paths[stage] = tmp_path / f"{stage}.out"
        upstream = entry.output_hash
    return manifest, paths


class TestHashing:
    def test_file_hash_tracks_content(self, tmp_path):
        path = touch(tmp_path / "a", "one")
        first = file_hash(path)
        assert first == file_hash(path)
        touch(tmp_path / "a", "two")
        assert file_hash(path) != first

    def test_combine_hashes_is_order_sensitive(self):
        assert combine_hashes("a", "b") != combine_hashes("b", "a")

    def test_combine_hashes_folds_settings_canonically(self):
        left = combine_hashes("x", settings={"b": 1, "a": 2})
        right = combine_hashes("x", settings={"a": 2, "b": 1})
        assert left == right
        assert left != combine_hashes("x", settings={"a": 2, "b": 9})


class TestPersistence:
    def test_round_trip(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        manifest.save()
        loaded = Manifest.load(manifest.path)
        assert loaded.stages == manifest.stages

    def test_load_missing_file_yields_empty_manifest(self, tmp_path):
        manifest = Manifest.load(str(tmp_path / "absent.json"))
        assert manifest.stages == {}

    def test_saved_file_is_human_readable_json(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        manifest.save()
        payload = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert payload["version"] == 1
        assert set(payload["stages"]) == set(STAGES)

    def test_unsupported_version_is_rejected(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"version": 99, "stages": {}}), encoding="utf-8")
        with pytest.raises(ValueError, match="unsupported"):
            Manifest.load(str(path))

    def test_corrupt_json_is_rejected(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{nope", encoding="utf-8")
        with pytest.raises(ValueError, match="not valid JSON"):
            Manifest.load(str(path))


class TestCurrency:
    def test_is_current_matches_recorded_input(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        entry = manifest.stages["ingest"]
        assert manifest.is_current("ingest", entry.input_hash)
        assert not manifest.is_current("ingest", "deadbeef")
        assert not manifest.is_current("embed", "deadbeef")

    def test_never_recorded_stage_is_not_current(self, tmp_path):
        manifest = Manifest(str(tmp_path / "m.json"))
        assert not manifest.is_current("ingest", "anything")

    def test_stage_with_deleted_output_is_not_current(self, tmp_path):
        manifest, paths = stage_chain(tmp_path)
        entry = manifest.stages["embed"]
        paths["embed"].unlink()
        assert not manifest.is_current("embed", entry.input_hash)

    def test_record_rejects_unknown_stage(self, tmp_path):
        manifest = Manifest(str(tmp_path / "m.json"))
        out = touch(tmp_path / "x.out", "x")
        with pytest.raises(ValueError, match="unknown stage"):
            manifest.record("compile", "hash", out)


class TestVerifyChain:
    def test_intact_chain_returns_the_requested_entry(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        entry = manifest.verify_chain("index")
        assert entry is manifest.stages["index"]

    def test_missing_stage_is_named(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        del manifest.stages["informalize"]
        with pytest.raises(StaleStageError, match="'informalize'.*never run"):
            manifest.verify_chain("embed")

    def test_deleted_output_is_reported(self, tmp_path):
        manifest, paths = stage_chain(tmp_path)
        paths["embed"].unlink()
        with pytest.raises(StaleStageError, match="'embed'.*missing"):
            manifest.verify_chain("index")

    def test_modified_output_is_reported(self, tmp_path):
        manifest, paths = stage_chain(tmp_path)
        paths["informalize"].write_text("tampered", encoding="utf-8")
        with pytest.raises(StaleStageError, match="'informalize'.*modified"):
            manifest.verify_chain("index")

    def test_upstream_rerun_stales_downstream_input(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        # Re-record ingest as if the source changed and the stage reran.
        new_out = touch(tmp_path / "ingest.out", "fresh artifact")
        manifest.record(
            "ingest",
            combine_hashes("new-source", settings={"stage": "ingest"}),
            new_out,
            {"stage": "ingest"},
        )
        with pytest.raises(StaleStageError, match="'informalize'.*inputs changed"):
            manifest.verify_chain("index")

    def test_changed_settings_stale_the_stage(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        entry = manifest.stages["embed"]
        manifest.record(
            "embed",
            entry.input_hash,
            entry.output_path,
            {"stage": "embed", "preset": "other"},
        )
        with pytest.raises(StaleStageError, match="'embed'.*inputs changed"):
            manifest.verify_chain("embed")

    def test_unknown_stage_is_a_value_error(self, tmp_path):
        manifest, _ = stage_chain(tmp_path)
        with pytest.raises(ValueError, match="unknown stage"):
            manifest.verify_chain("compile")
