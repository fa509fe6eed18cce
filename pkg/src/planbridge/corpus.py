"""Core corpus data model: sectioned documents, link-bearing summaries,
aligned pairs, and the flat input serialization the model consumes.

Documents arrive as JSONL with one object per line:

    {"doc_id": ..., "lang": ..., "title": ..., "sections":
        [{"heading": ..., "paragraphs": [...]}, ...]}

Summaries arrive as JSONL with character-offset hyperlinks:

    {"doc_id": ..., "lang": ..., "text": ..., "links":
        [{"start": ..., "end": ..., "url": ...}, ...]}

Both ingestion paths validate each line independently and either collect
rejects into a report (default) or fail fast (strict mode). Duplicate
doc_ids within one file are always fatal: silently keeping one of two
records would corrupt pairing downstream.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable
from urllib.parse import urlsplit

from .errors import DataError, DuplicateDocIdError
from .jsonl import iter_jsonl_lines, write_jsonl

if TYPE_CHECKING:
    from .annotate import ContentPlan

LANG_CODE_RE = re.compile(r"^[a-z]{2}$")

# Structural delimiters of the flat input serialization.
EOT_TOKEN = "[EOT]"
EOP_TOKEN = "[EOP]"

SPLIT_NAMES = ("train", "validation", "test")


def validate_lang_code(code: str, allowed: Iterable[str] | None = None) -> str:
    if not isinstance(code, str) or not LANG_CODE_RE.match(code):
        raise ValueError(f"language code must be two lowercase letters, got {code!r}")
    if allowed is not None and code not in set(allowed):
        raise ValueError(f"language {code!r} is not in the configured set {sorted(set(allowed))}")
    return code


@dataclass(frozen=True)
class Link:
    """A hyperlink anchored to a half-open character span of the summary text."""

    start: int
    end: int
    url: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"link span [{self.start}, {self.end}) is not a valid non-empty range")
        parts = urlsplit(self.url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"link url {self.url!r} is not an absolute http(s) URL")


@dataclass(frozen=True)
class Section:
    heading: str
    paragraphs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "paragraphs", tuple(self.paragraphs))
        for p in self.paragraphs:
            if not isinstance(p, str) or p == "":
                raise ValueError("paragraphs must be non-empty strings")


@dataclass(frozen=True)
class SectionedDocument:
    doc_id: str
    lang: str
    title: str
    sections: tuple[Section, ...]

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        validate_lang_code(self.lang)
        object.__setattr__(self, "sections", tuple(self.sections))
        if not self.sections:
            raise ValueError(f"document {self.doc_id!r} has no sections")

    def plain_text(self) -> str:
        """Title, headings, and paragraphs joined by newlines, no delimiter tokens."""
        parts = [self.title]
        for sec in self.sections:
            if sec.heading:
                parts.append(sec.heading)
            parts.extend(sec.paragraphs)
        return "\n".join(p for p in parts if p)


@dataclass(frozen=True)
class LinkedSummary:
    doc_id: str
    lang: str
    text: str
    links: tuple[Link, ...] = ()

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        validate_lang_code(self.lang)
        if not self.text:
            raise ValueError(f"summary {self.doc_id!r} has empty text")
        object.__setattr__(self, "links", tuple(self.links))
        prev_end = 0
        for link in self.links:
            if link.end > len(self.text):
                raise ValueError(
                    f"summary {self.doc_id!r}: link span [{link.start}, {link.end}) "
                    f"exceeds text length {len(self.text)}"
                )
            if link.start < prev_end:
                raise ValueError(
                    f"summary {self.doc_id!r}: links overlap or are out of order at offset {link.start}"
                )
            prev_end = link.end


@dataclass(frozen=True)
class Example:
    """One document/summary pair, optionally carrying an annotated plan."""

    document: SectionedDocument
    summary: LinkedSummary
    plan: "ContentPlan | None" = None

    def __post_init__(self):
        if self.document.doc_id != self.summary.doc_id:
            raise ValueError(
                f"document {self.document.doc_id!r} paired with summary {self.summary.doc_id!r}"
            )

    @property
    def doc_id(self) -> str:
        return self.document.doc_id


@dataclass(frozen=True)
class CorpusPair:
    """All examples for one (source language, target language) direction."""

    src_lang: str
    tgt_lang: str
    examples: tuple[Example, ...]

    def __post_init__(self):
        validate_lang_code(self.src_lang)
        validate_lang_code(self.tgt_lang)
        object.__setattr__(self, "examples", tuple(self.examples))
        seen = set()
        for ex in self.examples:
            if ex.document.lang != self.src_lang:
                raise ValueError(
                    f"document {ex.doc_id!r} has lang {ex.document.lang!r}, pair is {self.src_lang}->{self.tgt_lang}"
                )
            if ex.summary.lang != self.tgt_lang:
                raise ValueError(
                    f"summary {ex.doc_id!r} has lang {ex.summary.lang!r}, pair is {self.src_lang}->{self.tgt_lang}"
                )
            if ex.doc_id in seen:
                raise ValueError(f"doc_id {ex.doc_id!r} appears twice in pair")
            seen.add(ex.doc_id)

    def __len__(self) -> int:
        return len(self.examples)

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(ex.doc_id for ex in self.examples)


@dataclass(frozen=True)
class SplitSet:
    """Train/validation/test portions of one direction, disjoint by doc_id."""

    train: CorpusPair
    validation: CorpusPair
    test: CorpusPair

    def __post_init__(self):
        langs = {(p.src_lang, p.tgt_lang) for p in (self.train, self.validation, self.test)}
        if len(langs) != 1:
            raise ValueError(f"splits disagree on direction: {sorted(langs)}")
        ids: dict[str, str] = {}
        for name, pair in self.items():
            for doc_id in pair.doc_ids():
                if doc_id in ids:
                    raise ValueError(f"doc_id {doc_id!r} is in both {ids[doc_id]} and {name}")
                ids[doc_id] = name

    @property
    def src_lang(self) -> str:
        return self.train.src_lang

    @property
    def tgt_lang(self) -> str:
        return self.train.tgt_lang

    def items(self) -> tuple[tuple[str, CorpusPair], ...]:
        return (("train", self.train), ("validation", self.validation), ("test", self.test))

    def split(self, name: str) -> CorpusPair:
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)


def serialize_input(
    document: SectionedDocument,
    src_lang: str,
    tgt_lang: str,
    eot: str = EOT_TOKEN,
    eop: str = EOP_TOKEN,
) -> str:
    """Flatten a document into the model input string.

    Layout: the two language codes, the title closed by the end-of-title
    token, then each section as heading closed by the end-of-title token
    followed by its paragraphs each closed by the end-of-paragraph token.
    The document fields must not contain either delimiter token; ingestion
    enforces that, which makes this mapping invertible.
    """
    validate_lang_code(src_lang)
    validate_lang_code(tgt_lang)
    pieces = [document.title, eot]
    for sec in document.sections:
        pieces.append(sec.heading)
        pieces.append(eot)
        for para in sec.paragraphs:
            pieces.append(para)
            pieces.append(eop)
    return f"{src_lang} {tgt_lang} " + " ".join(pieces)


def parse_input(
    text: str, eot: str = EOT_TOKEN, eop: str = EOP_TOKEN
) -> tuple[str, str, str, tuple[Section, ...]]:
    """Invert serialize_input; raises DataError on text that no document produces."""
    m = re.match(r"^([a-z]{2}) ([a-z]{2}) ", text)
    if not m:
        raise DataError(f"serialized input does not start with two language codes: {text[:40]!r}")
    src, tgt = m.group(1), m.group(2)
    rest = text[m.end():]

    fields: list[str] = []
    marks: list[str] = []
    pos = 0
    token_re = re.compile("|".join(re.escape(t) for t in (eot, eop)))
    for tm in token_re.finditer(rest):
        seg = rest[pos : tm.start()]
        if not seg.endswith(" "):
            raise DataError(f"missing space before delimiter at offset {tm.start()}")
        fields.append(seg[:-1])
        marks.append(tm.group())
        pos = tm.end()
        if pos < len(rest):
            if rest[pos] != " ":
                raise DataError(f"missing space after delimiter at offset {pos}")
            pos += 1
    if pos != len(rest):
        raise DataError("serialized input has trailing text after the last delimiter")
    if not marks or marks[0] != eot:
        raise DataError("serialized input does not open with a title field")

    title = fields[0]
    sections: list[Section] = []
    i = 1
    while i < len(marks):
        if marks[i] != eot:
            raise DataError("expected a section heading")
        heading = fields[i]
        i += 1
        paragraphs: list[str] = []
        while i < len(marks) and marks[i] == eop:
            paragraphs.append(fields[i])
            i += 1
        sections.append(Section(heading=heading, paragraphs=tuple(paragraphs)))
    if not sections:
        raise DataError("serialized input has no sections")
    return src, tgt, title, tuple(sections)


@dataclass(frozen=True)
class MalformedLine:
    line_no: int
    cause: str


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: list[MalformedLine] = field(default_factory=list)


def _contains_delimiter(doc: SectionedDocument, tokens: tuple[str, ...]) -> str | None:
    for tok in tokens:
        if tok in doc.title:
            return f"title contains {tok!r}"
        for sec in doc.sections:
            if tok in sec.heading:
                return f"heading contains {tok!r}"
            for para in sec.paragraphs:
                if tok in para:
                    return f"paragraph contains {tok!r}"
    return None


def _document_from_obj(obj: dict) -> SectionedDocument:
    sections = tuple(
        Section(heading=s["heading"], paragraphs=tuple(s["paragraphs"]))
        for s in obj["sections"]
    )
    return SectionedDocument(
        doc_id=obj["doc_id"], lang=obj["lang"], title=obj["title"], sections=sections
    )


def _summary_from_obj(obj: dict) -> LinkedSummary:
    links = tuple(
        Link(start=l["start"], end=l["end"], url=l["url"]) for l in obj.get("links", [])
    )
    return LinkedSummary(
        doc_id=obj["doc_id"], lang=obj["lang"], text=obj["text"], links=links
    )


def _ingest(path, build, languages, strict, check=None):
    records = []
    report = IngestReport()
    seen: set[str] = set()
    for line_no, raw in iter_jsonl_lines(path):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            rec = build(obj)
            if languages is not None:
                validate_lang_code(rec.lang, allowed=languages)
            if check is not None:
                problem = check(rec)
                if problem:
                    raise ValueError(problem)
        except (ValueError, KeyError, TypeError) as exc:
            bad = MalformedLine(line_no=line_no, cause=f"{type(exc).__name__}: {exc}")
            if strict:
                raise DataError(f"{path}:{line_no}: {bad.cause}") from exc
            report.rejected.append(bad)
            continue
        if rec.doc_id in seen:
            raise DuplicateDocIdError(rec.doc_id, line_no)
        seen.add(rec.doc_id)
        records.append(rec)
        report.accepted += 1
    return records, report


def ingest_documents(
    path: str,
    *,
    languages: Iterable[str] | None = None,
    strict: bool = False,
    delimiter_tokens: tuple[str, ...] = (EOT_TOKEN, EOP_TOKEN),
) -> tuple[list[SectionedDocument], IngestReport]:
    return _ingest(
        path,
        _document_from_obj,
        languages,
        strict,
        check=lambda doc: _contains_delimiter(doc, delimiter_tokens),
    )


def ingest_summaries(
    path: str,
    *,
    languages: Iterable[str] | None = None,
    strict: bool = False,
) -> tuple[list[LinkedSummary], IngestReport]:
    return _ingest(path, _summary_from_obj, languages, strict)


def ingest_corpus(path: str, schema: str, **kwargs):
    """Dispatch on schema name: 'documents' or 'summaries'."""
    if schema == "documents":
        return ingest_documents(path, **kwargs)
    if schema == "summaries":
        return ingest_summaries(path, **kwargs)
    raise ValueError(f"unknown corpus schema {schema!r}")


def pair_examples(
    documents: Iterable[SectionedDocument],
    summaries: Iterable[LinkedSummary],
    src_lang: str,
    tgt_lang: str,
) -> CorpusPair:
    """Join documents and summaries on doc_id; both sides must cover the same ids."""
    documents = list(documents)
    docs = {d.doc_id: d for d in documents}
    sums = {s.doc_id: s for s in summaries}
    missing = sorted(set(docs) - set(sums))
    extra = sorted(set(sums) - set(docs))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"{len(missing)} documents without summaries (first: {missing[0]!r})")
        if extra:
            parts.append(f"{len(extra)} summaries without documents (first: {extra[0]!r})")
        raise DataError("cannot pair corpus: " + "; ".join(parts))
    try:
        examples = tuple(
            Example(document=docs[doc_id], summary=sums[doc_id])
            for doc_id in (d.doc_id for d in documents)
        )
        return CorpusPair(src_lang=src_lang, tgt_lang=tgt_lang, examples=examples)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def document_to_obj(doc: SectionedDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "lang": doc.lang,
        "title": doc.title,
        "sections": [
            {"heading": s.heading, "paragraphs": list(s.paragraphs)} for s in doc.sections
        ],
    }


def summary_to_obj(summary: LinkedSummary) -> dict:
    return {
        "doc_id": summary.doc_id,
        "lang": summary.lang,
        "text": summary.text,
        "links": [{"start": l.start, "end": l.end, "url": l.url} for l in summary.links],
    }


def write_documents(path: str, documents: Iterable[SectionedDocument]) -> int:
    return write_jsonl(path, (document_to_obj(d) for d in documents))


def write_summaries(path: str, summaries: Iterable[LinkedSummary]) -> int:
    return write_jsonl(path, (summary_to_obj(s) for s in summaries))
