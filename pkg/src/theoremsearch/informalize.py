"""Informalization: prompt a text-generation provider to translate formal
statements into natural-language name/statement pairs, and format corpus
documents from the results.

The generation contract is two labeled lines (INFORMAL NAME / INFORMAL
STATEMENT), parsed case-insensitively and order-independently. A response
that fails to parse is retried once with a format reminder appended; the
second failure is an error, never a fabricated pair.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable, Iterable

from .corpus import TheoremRecord
from .providers import RateLimiter, TextGenerationProvider

NAME_LABEL = "INFORMAL NAME:"
STATEMENT_LABEL = "INFORMAL STATEMENT:"

# Section markers inside the prompt; the offline mock also keys on these.
PROMPT_PREAMBLE = (
    "Translate the Lean 4 declaration below into natural language for a mathematician "
    "who does not read Lean. State exactly what the declaration asserts. Use the "
    "documentation and referenced definitions to spell out library-specific notation "
    "in plain terms."
)
SECTION_NAME = "Theorem name:"
SECTION_STATEMENT = "Formal statement:"
SECTION_DOCSTRING = "Docstring:"
SECTION_DEPENDENCY = "Referenced definition:"
OUTPUT_DIRECTIVE = (
    "Respond with exactly two lines:\n"
    f"{NAME_LABEL} <a short descriptive title>\n"
    f"{STATEMENT_LABEL} <one precise natural-language statement>"
)
FORMAT_REMINDER = (
    "Reminder: reply with exactly two lines, the first starting with "
    f"'{NAME_LABEL}' and the second starting with '{STATEMENT_LABEL}'."
)


class InformalizationFormatError(Exception):
    """Provider output did not contain both labeled fields."""


@dataclass
class InformalPair:
    theorem_id: str
    informal_name: str
    informal_statement: str


@dataclass
class GenerationRequest:
    prompt: str
    temperature: float = 0.0
    max_output_chars: int = 4096


def sanitize_name(name: str) -> str:
    """Names must stay single-line and colon-free for the document format."""
    return re.sub(r"\s+", " ", name.replace(":", "-")).strip()


def build_informalization_prompt(record: TheoremRecord) -> str:
    parts = [PROMPT_PREAMBLE, ""]
    parts.append(f"{SECTION_NAME} {record.name}")
    parts.append(SECTION_STATEMENT)
    parts.append(record.formal_statement)
    if record.docstring:
        parts.append(SECTION_DOCSTRING)
        parts.append(record.docstring)
    for dep in record.dependencies:
        parts.append("")
        parts.append(f"{SECTION_DEPENDENCY} {dep.name}")
        parts.append(SECTION_STATEMENT)
        parts.append(dep.statement)
        if dep.docstring:
            parts.append(SECTION_DOCSTRING)
            parts.append(dep.docstring)
    parts.append("")
    parts.append(OUTPUT_DIRECTIVE)
    return "\n".join(parts)


_LABEL_PATTERN = re.compile(
    rf"^[ \t]*({re.escape(NAME_LABEL)}|{re.escape(STATEMENT_LABEL)})",
    re.IGNORECASE | re.MULTILINE,
)


def parse_generation(text: str) -> tuple[str, str]:
    """Extract the two labeled fields; case-insensitive, any order.

    A field runs from its label to the next label or end of text, so
    statements wrapped over several lines still parse; the name is collapsed
    to a single line.
    """
    matches = list(_LABEL_PATTERN.finditer(text))
    fields: dict[str, str] = {}
    for i, m in enumerate(matches):
        label = m.group(1).upper()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        fields.setdefault(label, text[m.end() : end].strip())
    name = fields.get(NAME_LABEL)
    statement = fields.get(STATEMENT_LABEL)
    if not name or not statement:
        missing = [l for l, v in ((NAME_LABEL, name), (STATEMENT_LABEL, statement)) if not v]
        raise InformalizationFormatError(f"missing labeled field(s): {', '.join(missing)}")
    return re.sub(r"\s+", " ", name).strip(), statement


def informalize(
    record: TheoremRecord,
    provider: TextGenerationProvider,
    temperature: float = 0.0,
    max_output_chars: int = 4096,
) -> InformalPair:
    prompt = build_informalization_prompt(record)
    response = provider.generate(prompt, temperature=temperature, max_output_chars=max_output_chars)
    try:
        name, statement = parse_generation(response)
    except InformalizationFormatError:
        retry_prompt = f"{prompt}\n\n{FORMAT_REMINDER}"
        response = provider.generate(retry_prompt, temperature=temperature, max_output_chars=max_output_chars)
        name, statement = parse_generation(response)
    return InformalPair(
        theorem_id=record.id,
        informal_name=sanitize_name(name),
        informal_statement=statement,
    )


def format_corpus_entry(record: TheoremRecord, pair: InformalPair) -> str:
    """Bilingual document: formal statement, newline, name, colon, statement."""
    if pair.theorem_id != record.id:
        raise ValueError(f"pair is for {pair.theorem_id!r}, record is {record.id!r}")
    return f"{record.formal_statement}\n{pair.informal_name}:{pair.informal_statement}"


def format_informal_entry(pair: InformalPair) -> str:
    """Informal-only document: "theorem name: informal statement"."""
    return f"{pair.informal_name}: {pair.informal_statement}"


def format_document(record: TheoremRecord, pair: InformalPair | None, doc_mode: str) -> str:
    """Render one searchable document in the given corpus mode."""
    if doc_mode == "formal":
        return record.formal_statement
    if pair is None:
        raise ValueError(f"doc_mode {doc_mode!r} needs an informal pair for {record.id}")
    if doc_mode == "informal":
        return format_informal_entry(pair)
    if doc_mode == "bilingual":
        return format_corpus_entry(record, pair)
    raise ValueError(f"unknown doc_mode {doc_mode!r}")


def split_corpus_entry(document: str) -> tuple[str, str, str]:
    """Inverse of format_corpus_entry for single-line formal statements:
    split at the first newline, then the first colon."""
    formal, _, rest = document.partition("\n")
    name, _, statement = rest.partition(":")
    return formal, name, statement


def prompt_hash(provider_id: str, prompt: str) -> str:
    h = hashlib.sha256()
    h.update(provider_id.encode("utf-8"))
    h.update(b"\x00")
    h.update(prompt.encode("utf-8"))
    return h.hexdigest()


@dataclass
class PairRecord:
    """One cached informalization with its provenance."""

    theorem_id: str
    informal_name: str
    informal_statement: str
    provider_id: str
    prompt_hash: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "theorem_id": self.theorem_id,
                "informal_name": self.informal_name,
                "informal_statement": self.informal_statement,
                "provider_id": self.provider_id,
                "prompt_hash": self.prompt_hash,
            },
            ensure_ascii=False,
        )

    def pair(self) -> InformalPair:
        return InformalPair(self.theorem_id, self.informal_name, self.informal_statement)


def read_pair_records(stream: IO[str] | Iterable[str]) -> dict[str, PairRecord]:
    """Last record per theorem_id wins, mirroring corpus duplicate handling."""
    out: dict[str, PairRecord] = {}
    for line in stream:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        rec = PairRecord(
            theorem_id=obj["theorem_id"],
            informal_name=obj["informal_name"],
            informal_statement=obj["informal_statement"],
            provider_id=obj.get("provider_id", ""),
            prompt_hash=obj.get("prompt_hash", ""),
        )
        out[rec.theorem_id] = rec
    return out


def load_pairs_file(path: str) -> dict[str, InformalPair]:
    with open(path, "r", encoding="utf-8") as fh:
        return {tid: rec.pair() for tid, rec in read_pair_records(fh).items()}


def informalize_corpus(
    records: list[TheoremRecord],
    provider: TextGenerationProvider,
    out_path: str | None = None,
    cached: dict[str, PairRecord] | None = None,
    concurrency: int = 4,
    rate_limiter: RateLimiter | None = None,
    temperature: float = 0.0,
    on_progress: Callable[[int, int, bool], None] | None = None,
) -> list[InformalPair]:
    """Informalize every record, reusing cache rows whose prompt_hash matches.

    New rows are appended to out_path in record order as they complete, so an
    aborted run resumes from the last written record.
    """
    cached = cached or {}
    prompts = {r.id: build_informalization_prompt(r) for r in records}
    hashes = {r.id: prompt_hash(provider.provider_id, prompts[r.id]) for r in records}

    def run_one(record: TheoremRecord) -> tuple[InformalPair, bool]:
        hit = cached.get(record.id)
        if hit is not None and hit.prompt_hash == hashes[record.id]:
            return hit.pair(), True
        if rate_limiter is not None:
            rate_limiter.acquire()
        return informalize(record, provider, temperature=temperature), False

    out_fh = open(out_path, "a", encoding="utf-8") if out_path else None
    write_lock = threading.Lock()
    pairs: list[InformalPair] = []
    try:
        with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
            futures = [pool.submit(run_one, r) for r in records]
            for i, (record, future) in enumerate(zip(records, futures)):
                pair, was_cached = future.result()
                pairs.append(pair)
                if out_fh is not None and not was_cached:
                    row = PairRecord(
                        theorem_id=pair.theorem_id,
                        informal_name=pair.informal_name,
                        informal_statement=pair.informal_statement,
                        provider_id=provider.provider_id,
                        prompt_hash=hashes[record.id],
                    )
                    with write_lock:
                        out_fh.write(row.to_json() + "\n")
                        out_fh.flush()
                if on_progress is not None:
                    on_progress(i + 1, len(records), was_cached)
    finally:
        if out_fh is not None:
            out_fh.close()
    return pairs
