"""Entity-chain plan annotation.

A summary's hyperlinks name its salient entities in order. Annotation
filters pronunciation links, resolves each remaining URL through the KB
bridge, collapses repeat entities to their first mention, and attaches
source- and target-language canonical labels to each one. The result is
the content plan for that example; an example where nothing resolves
becomes a gap and survives only in the unfiltered corpus.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Mapping
from urllib.parse import unquote, urlsplit

from .corpus import CorpusPair, Example, LinkedSummary, validate_lang_code
from .errors import DataError
from .jsonl import read_jsonl, write_jsonl
from .kb import QID_RE, KbSource, UrlCache, label_for, resolve_url

logger = logging.getLogger(__name__)

# URL path fragments that mark pronunciation-help links rather than entities.
PRONUNCIATION_PATTERNS = ("Help:IPA", "Help:Pronunciation")

DEFAULT_FALLBACK_LANGS = ("en",)


class PlanVariant(enum.Enum):
    MIXED = "mixed"
    SRC_ONLY = "src"
    TGT_ONLY = "tgt"

    @classmethod
    def parse(cls, name: str) -> "PlanVariant":
        for member in cls:
            if member.value == name or member.name.lower() == name.lower():
                return member
        raise ValueError(f"unknown plan variant {name!r}")


@dataclass(frozen=True)
class PlanEntity:
    """One plan slot: labels on both sides plus provenance when known.

    Entities decoded from model output carry labels only; qid and span
    exist just for annotated gold plans.
    """

    src_label: str = ""
    tgt_label: str = ""
    qid: str | None = None
    mention_span: tuple[int, int] | None = None
    src_is_fallback: bool = False
    tgt_is_fallback: bool = False

    def __post_init__(self):
        if not self.src_label and not self.tgt_label:
            raise ValueError("plan entity needs at least one label")
        if self.qid is not None and not QID_RE.match(self.qid):
            raise ValueError(f"malformed entity id {self.qid!r}")
        if self.mention_span is not None:
            start, end = self.mention_span
            if not (0 <= start < end):
                raise ValueError(f"bad mention span {self.mention_span}")
            object.__setattr__(self, "mention_span", (start, end))


@dataclass(frozen=True)
class ContentPlan:
    entities: tuple[PlanEntity, ...] = ()
    variant: PlanVariant = PlanVariant.MIXED
    length_tag: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        qids = [e.qid for e in self.entities if e.qid is not None]
        if len(qids) != len(set(qids)):
            raise ValueError("plan repeats an entity id")
        if self.length_tag is not None and self.length_tag < 0:
            raise ValueError(f"negative length tag {self.length_tag}")

    def __len__(self) -> int:
        return len(self.entities)

    def qid_sequence(self) -> tuple[str | None, ...]:
        return tuple(e.qid for e in self.entities)


@dataclass(frozen=True)
class PlanGap:
    """Marker for an example whose summary yielded no usable plan."""

    doc_id: str
    reason: str


@dataclass(frozen=True)
class Mention:
    start: int
    end: int
    url: str


def _is_pronunciation(url: str, patterns: Iterable[str]) -> bool:
    path = unquote(urlsplit(url).path).casefold()
    return any(p.casefold() in path for p in patterns)


def extract_entity_mentions(
    summary: LinkedSummary,
    pronunciation_patterns: Iterable[str] = PRONUNCIATION_PATTERNS,
) -> list[Mention]:
    """Links in ascending span order with pronunciation-help links removed."""
    patterns = tuple(pronunciation_patterns)
    return [
        Mention(start=link.start, end=link.end, url=link.url)
        for link in summary.links
        if not _is_pronunciation(link.url, patterns)
    ]


def project_variant(plan: ContentPlan, variant: PlanVariant) -> ContentPlan:
    """Keep the qid sequence, drop the label side the variant does not use."""
    if variant is PlanVariant.MIXED:
        return replace(plan, variant=variant)
    entities = []
    for e in plan.entities:
        if variant is PlanVariant.SRC_ONLY:
            if not e.src_label:
                raise ValueError(f"entity {e.qid or e.tgt_label!r} has no source-side label")
            entities.append(replace(e, tgt_label="", tgt_is_fallback=False))
        else:
            if not e.tgt_label:
                raise ValueError(f"entity {e.qid or e.src_label!r} has no target-side label")
            entities.append(replace(e, src_label="", src_is_fallback=False))
    return replace(plan, entities=tuple(entities), variant=variant)


def annotate_plan(
    summary: LinkedSummary,
    src: str,
    tgt: str,
    kb: KbSource,
    variant: PlanVariant = PlanVariant.MIXED,
    *,
    cache: UrlCache | None = None,
    fallback_langs: Iterable[str] = DEFAULT_FALLBACK_LANGS,
    pronunciation_patterns: Iterable[str] = PRONUNCIATION_PATTERNS,
) -> ContentPlan | PlanGap:
    """Build the entity-chain plan for one summary, or report why there is none.

    Mention order is first-mention order in the text; repeats of one entity
    collapse onto the first mention. Labels prefer the requested language,
    then the fallback chain, then the opposite side's language, and the
    fallback flag records when the preferred language was missing.
    """
    validate_lang_code(src)
    validate_lang_code(tgt)
    if tgt != summary.lang:
        raise ValueError(
            f"summary {summary.doc_id!r} is in {summary.lang!r}, expected target {tgt!r}"
        )
    mentions = extract_entity_mentions(summary, pronunciation_patterns)
    if not mentions:
        return PlanGap(doc_id=summary.doc_id, reason="no_linked_entities")

    fallbacks = tuple(fallback_langs)
    src_chain = _chain_without(fallbacks + (tgt,), src)
    tgt_chain = _chain_without(fallbacks + (src,), tgt)

    entities: list[PlanEntity] = []
    seen_qids: set[str] = set()
    resolved_any = False
    for mention in mentions:
        record = resolve_url(mention.url, kb, cache)
        if record is None:
            logger.debug("unresolvable mention %s in %s", mention.url, summary.doc_id)
            continue
        resolved_any = True
        if record.qid in seen_qids:
            continue
        src_lookup = label_for(record, src, src_chain)
        tgt_lookup = label_for(record, tgt, tgt_chain)
        if src_lookup is None or tgt_lookup is None:
            # Record has no label in any configured language; unusable.
            continue
        seen_qids.add(record.qid)
        entities.append(
            PlanEntity(
                src_label=src_lookup.text,
                tgt_label=tgt_lookup.text,
                qid=record.qid,
                mention_span=(mention.start, mention.end),
                src_is_fallback=src_lookup.is_fallback,
                tgt_is_fallback=tgt_lookup.is_fallback,
            )
        )
    if not entities:
        reason = "no_labeled_entities" if resolved_any else "no_resolvable_entities"
        return PlanGap(doc_id=summary.doc_id, reason=reason)
    plan = ContentPlan(entities=tuple(entities), variant=PlanVariant.MIXED)
    return project_variant(plan, variant)


def _chain_without(chain: tuple[str, ...], primary: str) -> tuple[str, ...]:
    out = []
    for lang in chain:
        if lang != primary and lang not in out:
            out.append(lang)
    return tuple(out)


def annotate_pair(
    pair: CorpusPair,
    kb: KbSource,
    variant: PlanVariant = PlanVariant.MIXED,
    *,
    cache: UrlCache | None = None,
    fallback_langs: Iterable[str] = DEFAULT_FALLBACK_LANGS,
    pronunciation_patterns: Iterable[str] = PRONUNCIATION_PATTERNS,
    jobs: int = 1,
) -> tuple[CorpusPair, list[PlanGap]]:
    """Annotate every example; output order follows input order even when parallel."""

    def one(example: Example) -> ContentPlan | PlanGap:
        return annotate_plan(
            example.summary,
            pair.src_lang,
            pair.tgt_lang,
            kb,
            variant,
            cache=cache,
            fallback_langs=fallback_langs,
            pronunciation_patterns=pronunciation_patterns,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, pair.examples))
    else:
        results = [one(ex) for ex in pair.examples]

    gaps: list[PlanGap] = []
    examples: list[Example] = []
    for example, result in zip(pair.examples, results):
        if isinstance(result, PlanGap):
            gaps.append(result)
            examples.append(example)
        else:
            examples.append(replace(example, plan=result))
    annotated = CorpusPair(pair.src_lang, pair.tgt_lang, tuple(examples))
    return annotated, gaps


@dataclass(frozen=True)
class GapReport:
    total: int
    gaps: tuple[PlanGap, ...]

    @property
    def fraction(self) -> float:
        return len(self.gaps) / self.total if self.total else 0.0


def build_filtered_corpus(
    pair: CorpusPair, gaps: Iterable[PlanGap] | None = None
) -> tuple[CorpusPair, GapReport]:
    """Split an annotated pair into the examples that actually carry plans.

    The gap report covers every planless example whether or not the caller
    passed explicit gap records for it.
    """
    known = {g.doc_id: g for g in gaps} if gaps is not None else {}
    kept = []
    gap_list = []
    for ex in pair.examples:
        if ex.plan is not None:
            kept.append(ex)
        else:
            gap_list.append(known.get(ex.doc_id, PlanGap(doc_id=ex.doc_id, reason="missing_plan")))
    filtered = CorpusPair(pair.src_lang, pair.tgt_lang, tuple(kept))
    return filtered, GapReport(total=len(pair.examples), gaps=tuple(gap_list))


def plan_to_obj(doc_id: str, plan: ContentPlan) -> dict:
    entities = []
    for e in plan.entities:
        start, end = e.mention_span if e.mention_span is not None else (None, None)
        entities.append(
            {"qid": e.qid, "src": e.src_label, "tgt": e.tgt_label, "start": start, "end": end}
        )
    return {"doc_id": doc_id, "variant": plan.variant.value, "entities": entities}


def plan_from_obj(obj: dict) -> tuple[str, ContentPlan]:
    variant = PlanVariant.parse(obj["variant"])
    entities = []
    for e in obj["entities"]:
        span = None
        if e.get("start") is not None and e.get("end") is not None:
            span = (e["start"], e["end"])
        entities.append(
            PlanEntity(
                src_label=e.get("src", ""),
                tgt_label=e.get("tgt", ""),
                qid=e.get("qid"),
                mention_span=span,
            )
        )
    return obj["doc_id"], ContentPlan(entities=tuple(entities), variant=variant)


def write_plan_sidecar(path: str, plans: Mapping[str, ContentPlan]) -> int:
    return write_jsonl(path, (plan_to_obj(doc_id, plan) for doc_id, plan in plans.items()))


def read_plan_sidecar(path: str) -> dict[str, ContentPlan]:
    plans: dict[str, ContentPlan] = {}
    for obj in read_jsonl(path):
        try:
            doc_id, plan = plan_from_obj(obj)
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: bad plan record: {exc}") from exc
        if doc_id in plans:
            raise DataError(f"{path}: duplicate plan for {doc_id!r}")
        plans[doc_id] = plan
    return plans


def write_gap_report(path: str, gaps: Iterable[PlanGap]) -> int:
    return write_jsonl(path, ({"doc_id": g.doc_id, "reason": g.reason} for g in gaps))
