"""Offline text-generation provider for development and end-to-end tests.

The mock distinguishes informalization from query-augmentation prompts by
the output directive each one embeds, parses the payload back out of the
prompt's labeled sections, and answers with a deterministic transform in the
exact reply format the real providers are asked for. Everything upstream
(prompt construction) and downstream (reply parsing) is the production code
path; only the language model is simulated.
"""

from __future__ import annotations

import re

from . import informalize as inf
from . import pipeline as pipe
from .providers import ProviderError

_THEOREM_NAME_PATTERN = re.compile(rf"^{re.escape(inf.SECTION_NAME)} (.*)$", re.MULTILINE)


class MockTextGenerationProvider:
    """Deterministic stand-in for a text-generation model; never leaves the process."""

    def __init__(self):
        self.provider_id = "mock-gen"
        self.call_count = 0
        self.prompts: list[str] = []

    def generate(self, prompt: str, *, temperature: float = 0.0, max_output_chars: int = 4096) -> str:
        self.call_count += 1
        self.prompts.append(prompt)
        if inf.OUTPUT_DIRECTIVE in prompt:
            return self._informalize(prompt)
        if pipe.AUGMENT_DIRECTIVE in prompt:
            return self._augment(prompt)
        raise ProviderError("mock provider does not recognize this prompt shape")

    def _informalize(self, prompt: str) -> str:
        name_match = _THEOREM_NAME_PATTERN.search(prompt)
        if name_match is None:
            raise ProviderError("informalization prompt lacks a theorem name section")
        name = name_match.group(1).strip()
        statement = self._own_statement(prompt)
        informal_name = name.replace(".", " ").replace("_", " ").strip()
        return (
            f"{inf.NAME_LABEL} {informal_name} in words\n"
            f"{inf.STATEMENT_LABEL} The declaration {name} asserts: {statement}"
        )

    @staticmethod
    def _own_statement(prompt: str) -> str:
        """The theorem's own formal block: from the first statement marker to
        the next section break."""
        lines = prompt.splitlines()
        try:
            start = lines.index(inf.SECTION_STATEMENT) + 1
        except ValueError:
            raise ProviderError("informalization prompt lacks a formal statement section") from None
        collected: list[str] = []
        for line in lines[start:]:
            if (
                line == inf.SECTION_DOCSTRING
                or line.startswith(inf.SECTION_DEPENDENCY)
                or line == ""
            ):
                break
            collected.append(line)
        statement = " ".join(collected).strip()
        if not statement:
            raise ProviderError("informalization prompt has an empty statement section")
        return statement

    def _augment(self, prompt: str) -> str:
        body = prompt
        directive_at = body.rfind(pipe.AUGMENT_DIRECTIVE)
        body = body[:directive_at].rstrip()
        slot_at = body.rfind("\nQuery: ")
        if slot_at == -1:
            raise ProviderError("augmentation prompt lacks a query slot")
        query = body[slot_at + len("\nQuery: ") :].strip()
        name = " ".join(query.split()[:8])
        return (
            f"{pipe.FORMAL_LABEL} example : {query}\n"
            f"{pipe.NAME_LABEL} {name} (expanded)\n"
            f"{pipe.STATEMENT_LABEL} Precisely: {query}"
        )
