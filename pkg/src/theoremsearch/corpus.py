"""Corpus ingestion: parse line-delimited theorem records and resolve statement links.

The interchange format is one JSON object per line (UTF-8, LF) with fields
``id``, ``name``, ``kind``, ``statement``, optional ``docstring`` and
``source_path``.  Statements may embed anchors written ``[display](target)``;
targets naming another record in the same corpus become dependency
annotations on the referencing record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable

VALID_KINDS = ("theorem", "definition", "other")

# Fixed serialization order so that parse -> serialize round-trips bytes.
_FIELD_ORDER = ("id", "name", "kind", "statement", "docstring", "source_path")


@dataclass
class DefRecord:
    """A referenced declaration attached to a theorem as context."""

    name: str
    statement: str
    docstring: str | None = None


@dataclass
class TheoremRecord:
    """One formal declaration plus its resolved dependency annotations."""

    id: str
    name: str
    formal_statement: str
    docstring: str | None = None
    dependencies: list[DefRecord] = field(default_factory=list)
    source_path: str = ""
    kind: str = "theorem"
    # Original statement markup, kept so serialization preserves anchors.
    statement_markup: str | None = None
    link_targets: list[str] = field(default_factory=list)


@dataclass
class LinkedStatement:
    """Statement text with anchors stripped; spans index into plain_text."""

    plain_text: str
    links: list[tuple[tuple[int, int], str]] = field(default_factory=list)


@dataclass
class Diagnostic:
    """One ingest problem. Kinds: schema, duplicate, markup, unresolved.

    ``schema`` and ``duplicate`` consume their input line (the line yields no
    record in the final corpus); ``markup`` and ``unresolved`` annotate lines
    that still produce records.
    """

    line_no: int
    kind: str
    message: str

    def consumes_line(self) -> bool:
        return self.kind in ("schema", "duplicate")


@dataclass
class ParsedCorpus:
    records: list[TheoremRecord]
    diagnostics: list[Diagnostic]

    def schema_error_count(self) -> int:
        return sum(1 for d in self.diagnostics if d.consumes_line())


def extract_links(markup: str, warnings: list[str] | None = None) -> LinkedStatement:
    """Strip ``[display](target)`` anchors, recording one link per anchor.

    Bracketed text not followed by ``(`` is ordinary statement text (formal
    languages use square brackets natively) and passes through verbatim.  An
    anchor opened but never closed is reported through ``warnings`` and kept
    as plain text.
    """
    out: list[str] = []
    links: list[tuple[tuple[int, int], str]] = []
    pos = 0
    n = len(markup)
    while pos < n:
        ch = markup[pos]
        if ch != "[":
            out.append(ch)
            pos += 1
            continue
        close = markup.find("]", pos + 1)
        if close == -1:
            if warnings is not None:
                warnings.append(f"unterminated '[' at offset {pos}")
            out.append(markup[pos:])
            break
        if close + 1 >= n or markup[close + 1] != "(":
            # Plain bracketed text, not an anchor.
            out.append(ch)
            pos += 1
            continue
        target_end = markup.find(")", close + 2)
        if target_end == -1:
            if warnings is not None:
                warnings.append(f"anchor missing ')' at offset {pos}")
            out.append(markup[pos:])
            break
        display = markup[pos + 1 : close]
        target = markup[close + 2 : target_end]
        start = sum(len(s) for s in out)
        out.append(display)
        links.append(((start, start + len(display)), target))
        pos = target_end + 1
    return LinkedStatement(plain_text="".join(out), links=links)


def _parse_line(line_no: int, line: str, diagnostics: list[Diagnostic]) -> TheoremRecord | None:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        diagnostics.append(Diagnostic(line_no, "schema", f"invalid record syntax: {exc.msg}"))
        return None
    if not isinstance(obj, dict):
        diagnostics.append(Diagnostic(line_no, "schema", "record is not an object"))
        return None
    for fname in ("id", "name", "kind", "statement"):
        if fname not in obj:
            diagnostics.append(Diagnostic(line_no, "schema", f"missing field: {fname}"))
            return None
        if not isinstance(obj[fname], str):
            diagnostics.append(Diagnostic(line_no, "schema", f"field is not a string: {fname}"))
            return None
    if not obj["id"]:
        diagnostics.append(Diagnostic(line_no, "schema", "empty field: id"))
        return None
    if not obj["statement"]:
        diagnostics.append(Diagnostic(line_no, "schema", "empty field: statement"))
        return None
    if obj["kind"] not in VALID_KINDS:
        diagnostics.append(
            Diagnostic(line_no, "schema", f"unknown kind: {obj['kind']!r} (expected one of {', '.join(VALID_KINDS)})")
        )
        return None
    docstring = obj.get("docstring")
    if docstring is not None and not isinstance(docstring, str):
        diagnostics.append(Diagnostic(line_no, "schema", "field is not a string: docstring"))
        return None

    markup_warnings: list[str] = []
    linked = extract_links(obj["statement"], markup_warnings)
    for w in markup_warnings:
        diagnostics.append(Diagnostic(line_no, "markup", w))
    return TheoremRecord(
        id=obj["id"],
        name=obj["name"],
        formal_statement=linked.plain_text,
        docstring=docstring,
        source_path=str(obj.get("source_path", "")),
        kind=obj["kind"],
        statement_markup=obj["statement"],
        link_targets=[target for _, target in linked.links],
    )


def resolve_dependencies(records: list[TheoremRecord]) -> list[Diagnostic]:
    """Attach one DefRecord per in-corpus link target; one level deep.

    Self-links are dropped, duplicate targets collapse to one annotation, and
    links to names absent from the corpus are reported, not fatal.
    """
    by_id = {r.id: r for r in records}
    diagnostics: list[Diagnostic] = []
    for record in records:
        seen: set[str] = set()
        deps: list[DefRecord] = []
        for target in record.link_targets:
            if target == record.id or target in seen:
                continue
            seen.add(target)
            hit = by_id.get(target)
            if hit is None:
                diagnostics.append(
                    Diagnostic(0, "unresolved", f"{record.id}: link target not in corpus: {target}")
                )
                continue
            deps.append(DefRecord(name=hit.id, statement=hit.formal_statement, docstring=hit.docstring))
        record.dependencies = deps
    return diagnostics


def parse_corpus(stream: IO[str] | Iterable[str]) -> ParsedCorpus:
    """Parse interchange lines into records, resolving dependencies in-corpus.

    Records come back in input order (for duplicate ids the last occurrence
    wins and the earlier line is reported).  Every non-empty input line is
    accounted for by exactly one kept record or one line-consuming diagnostic.
    """
    diagnostics: list[Diagnostic] = []
    ordered: list[TheoremRecord] = []
    line_of: dict[str, int] = {}
    line_no = 0
    for raw in stream:
        line_no += 1
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        record = _parse_line(line_no, line, diagnostics)
        if record is None:
            continue
        if record.id in line_of:
            diagnostics.append(
                Diagnostic(line_of[record.id], "duplicate", f"duplicate id {record.id}: line {line_no} wins")
            )
            ordered = [r for r in ordered if r.id != record.id]
        line_of[record.id] = line_no
        ordered.append(record)
    diagnostics.extend(resolve_dependencies(ordered))
    return ParsedCorpus(records=ordered, diagnostics=diagnostics)


def serialize_record(record: TheoremRecord) -> str:
    """One canonical interchange line for a record (no trailing newline)."""
    obj = {
        "id": record.id,
        "name": record.name,
        "kind": record.kind,
        "statement": record.statement_markup if record.statement_markup is not None else record.formal_statement,
        "source_path": record.source_path,
    }
    if record.docstring is not None:
        obj["docstring"] = record.docstring
    ordered = {k: obj[k] for k in _FIELD_ORDER if k in obj}
    return json.dumps(ordered, ensure_ascii=False)


def serialize_corpus(records: list[TheoremRecord]) -> str:
    return "".join(serialize_record(r) + "\n" for r in records)


def load_corpus_file(path: str) -> ParsedCorpus:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_corpus(fh)


def select_search_records(records: list[TheoremRecord], kinds: Iterable[str] = ("theorem",)) -> list[TheoremRecord]:
    """Pick the records that enter the search corpus (theorems by default)."""
    wanted = set(kinds)
    unknown = wanted.difference(VALID_KINDS)
    if unknown:
        raise ValueError(f"unknown kinds: {sorted(unknown)}")
    return [r for r in records if r.kind in wanted]
