"""Rule-based sentence splitting for the entailment metric.

The faithfulness score averages over summary sentences, so splitting has
to be deterministic and cheap rather than linguistically perfect. The
splitter breaks after terminal punctuation followed by whitespace and an
upper-case letter or digit, with a small per-language abbreviation list
to suppress false breaks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol

_CANDIDATE_RE = re.compile(r"[.!?…]+[\"'»”’)\]]*\s+")
_OPENERS = "\"'«“‘(["

# Tokens that commonly precede a period without ending the sentence.
_ABBREVIATIONS: dict[str, frozenset[str]] = {
    "en": frozenset({"mr", "mrs", "ms", "dr", "prof", "st", "no", "vs", "etc",
                     "jr", "sr", "e.g", "i.e", "u.s", "inc", "ltd", "fig",
                     "vol", "ca"}),
    "cs": frozenset({"np", "tzv", "str", "č", "tj", "atd", "apod", "resp",
                     "mudr", "ing", "r", "stol"}),
    "de": frozenset({"z.b", "bzw", "usw", "dr", "prof", "nr", "ca", "ggf",
                     "u.a", "d.h", "str"}),
    "fr": frozenset({"m", "mme", "mlle", "dr", "av", "etc", "p.ex", "st",
                     "ste"}),
}


class SentenceSplitter(Protocol):
    def split(self, text: str) -> list[str]:
        ...


def _starts_sentence(text: str, i: int) -> bool:
    while i < len(text) and text[i] in _OPENERS:
        i += 1
    if i >= len(text):
        return False
    ch = text[i]
    return ch.isupper() or ch.isdigit()


@dataclass(frozen=True)
class RuleSentenceSplitter:
    lang: str = "en"
    extra_abbreviations: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        # accept any iterable of entries, with or without the trailing dot
        cleaned = frozenset(a.casefold().rstrip(".") for a in self.extra_abbreviations)
        object.__setattr__(self, "extra_abbreviations", cleaned)

    def _suppressed(self, chunk: str) -> bool:
        chunk = chunk.rstrip("\"'»”’)]")
        if not chunk.endswith("."):
            return False
        words = chunk.split()
        if not words:
            return False
        last = words[-1].rstrip(".")
        # initials ("J. Smith") and spaced abbreviations ("z. B.") alike
        if len(last) == 1 and last.isalpha():
            return True
        abbrevs = _ABBREVIATIONS.get(self.lang, frozenset()) | self.extra_abbreviations
        return last.casefold() in abbrevs

    def split(self, text: str) -> list[str]:
        """Split into trimmed, non-empty sentences; non-blank text yields at least one."""
        out: list[str] = []
        start = 0
        for m in _CANDIDATE_RE.finditer(text):
            if not _starts_sentence(text, m.end()):
                continue
            chunk = text[start : m.end()].strip()
            if self._suppressed(chunk):
                continue
            if chunk:
                out.append(chunk)
            start = m.end()
        tail = text[start:].strip()
        if tail:
            out.append(tail)
        return out
