"""Pipeline manifest: content hashes that chain the build stages together.

Each stage records the hash of what it consumed and the hash of what it
produced. A stage is current only while its recorded input hash still matches
a fresh hash of today's inputs and its output file still matches the recorded
output hash; downstream commands refuse to run on top of a stale stage, and
re-running a current stage is a no-op. This is what makes every CLI command
idempotent and cheap to re-run after interruption.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

STAGES = ("ingest", "informalize", "embed", "index")

MANIFEST_VERSION = 1


class StaleStageError(RuntimeError):
    """A prerequisite stage is missing or out of date."""

    def __init__(self, stage: str, reason: str):
        super().__init__(f"stage {stage!r} is not current: {reason}")
        self.stage = stage
        self.reason = reason


def file_hash(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def combine_hashes(*parts: str, settings: Mapping[str, Any] | None = None) -> str:
    """Order-sensitive digest of input hashes plus the stage's settings."""
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("ascii"))
        h.update(b"\x00")
    h.update(json.dumps(dict(settings or {}), sort_keys=True).encode("utf-8"))
    return h.hexdigest()


@dataclass
class StageEntry:
    input_hash: str
    output_path: str
    output_hash: str
    settings: dict[str, Any] = field(default_factory=dict)


@dataclass
class Manifest:
    path: str
    stages: dict[str, StageEntry] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str) -> "Manifest":
        if not os.path.exists(path):
            return cls(path=path)
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"manifest {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict) or data.get("version") != MANIFEST_VERSION:
            raise ValueError(f"manifest {path} has an unsupported layout")
        stages = {}
        for name, entry in data.get("stages", {}).items():
            stages[name] = StageEntry(
                input_hash=entry["input_hash"],
                output_path=entry["output_path"],
                output_hash=entry["output_hash"],
                settings=dict(entry.get("settings", {})),
            )
        return cls(path=path, stages=stages)

    def save(self) -> None:
        data = {
            "version": MANIFEST_VERSION,
            "stages": {name: asdict(entry) for name, entry in sorted(self.stages.items())},
        }
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self.path)

    def record(
        self,
        stage: str,
        input_hash: str,
        output_path: str,
        settings: Mapping[str, Any] | None = None,
    ) -> StageEntry:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        entry = StageEntry(
            input_hash=input_hash,
            output_path=output_path,
            output_hash=file_hash(output_path),
            settings=dict(settings or {}),
        )
        self.stages[stage] = entry
        return entry

    def is_current(self, stage: str, input_hash: str) -> bool:
        entry = self.stages.get(stage)
        if entry is None:
            return False
        if entry.input_hash != input_hash:
            return False
        if not os.path.exists(entry.output_path):
            return False
        return file_hash(entry.output_path) == entry.output_hash

    def verify_chain(self, through: str) -> StageEntry:
        """The stale-refusal gate: every stage up to and including `through`
        must exist, have an intact output file, and have an input hash that
        still matches its predecessor's recorded output. Returns the entry
        for `through`."""
        if through not in STAGES:
            raise ValueError(f"unknown stage {through!r}")
        prev: StageEntry | None = None
        entry: StageEntry | None = None
        for stage in STAGES[: STAGES.index(through) + 1]:
            entry = self.stages.get(stage)
            if entry is None:
                raise StaleStageError(stage, "never run")
            if not os.path.exists(entry.output_path):
                raise StaleStageError(stage, f"output file {entry.output_path} is missing")
            if file_hash(entry.output_path) != entry.output_hash:
                raise StaleStageError(stage, f"output file {entry.output_path} was modified")
            if prev is not None and entry.input_hash != combine_hashes(
                prev.output_hash, settings=entry.settings
            ):
                raise StaleStageError(stage, "its inputs changed after it ran")
            prev = entry
        assert entry is not None
        return entry
