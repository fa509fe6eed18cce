"""Plan perturbations and the target-sequence codec.

The training target is one string: the rendered plan section followed by
the summary. Rendering MIXED plans pairs each entity's source and target
labels with " & " and joins entities with " | "; decode is the
best-effort inverse, tolerant of model output that lost its structure.

Perturbations (shuffle, fixed-fraction corruption, length tagging) are
pure functions of (plan, seed) so a rebuild with the same seed is
byte-identical.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, replace

from .annotate import ContentPlan, PlanEntity, PlanVariant
from .errors import MarkerCollisionError

PLAN_MARK = "[PLAN]"
SUMMARY_MARK = "[SUMMARY]"
ENTITY_SEP = " | "
PAIR_SEP = " & "
LENGTH_PREFIX = "LEN="


@dataclass(frozen=True)
class PlanMarkup:
    """The marker strings of the codec; override to retarget a vocabulary."""

    plan_mark: str = PLAN_MARK
    summary_mark: str = SUMMARY_MARK
    entity_sep: str = ENTITY_SEP
    pair_sep: str = PAIR_SEP
    length_prefix: str = LENGTH_PREFIX

    def __post_init__(self):
        values = (self.plan_mark, self.summary_mark, self.entity_sep, self.pair_sep)
        if len(set(values)) != len(values) or not all(values):
            raise ValueError("markup strings must be distinct and non-empty")

    def reserved(self) -> tuple[str, ...]:
        return (self.plan_mark, self.summary_mark, self.entity_sep, self.pair_sep)


DEFAULT_MARKUP = PlanMarkup()


@dataclass(frozen=True)
class TargetSequence:
    text: str
    plan_span: tuple[int, int]
    summary_span: tuple[int, int]

    def __post_init__(self):
        for span in (self.plan_span, self.summary_span):
            s, e = span
            if not (0 <= s <= e <= len(self.text)):
                raise ValueError(f"span {span} outside text of length {len(self.text)}")

    @property
    def plan_text(self) -> str:
        return self.text[self.plan_span[0] : self.plan_span[1]]

    @property
    def summary_text(self) -> str:
        return self.text[self.summary_span[0] : self.summary_span[1]]


def _check_markers(value: str, field: str, markup: PlanMarkup) -> None:
    for marker in markup.reserved():
        if marker in value:
            raise MarkerCollisionError(field, marker)


def render_entity(entity: PlanEntity, variant: PlanVariant, markup: PlanMarkup = DEFAULT_MARKUP) -> str:
    if variant is PlanVariant.SRC_ONLY:
        return entity.src_label
    if variant is PlanVariant.TGT_ONLY:
        return entity.tgt_label
    return f"{entity.src_label}{markup.pair_sep}{entity.tgt_label}"


def render_plan(plan: ContentPlan, markup: PlanMarkup = DEFAULT_MARKUP) -> str:
    """Plan body as text: optional LEN=k token, then the entity cells."""
    for e in plan.entities:
        _check_markers(e.src_label, "src_label", markup)
        _check_markers(e.tgt_label, "tgt_label", markup)
    cells = [render_entity(e, plan.variant, markup) for e in plan.entities]
    body = markup.entity_sep.join(cells)
    if plan.length_tag is not None:
        tag = f"{markup.length_prefix}{plan.length_tag}"
        body = f"{tag} {body}" if body else tag
    return body


def encode_plan_section(plan: ContentPlan, markup: PlanMarkup = DEFAULT_MARKUP) -> str:
    """The full prefix up to and including the summary marker."""
    body = render_plan(plan, markup)
    if body:
        return f"{markup.plan_mark} {body} {markup.summary_mark}"
    return f"{markup.plan_mark} {markup.summary_mark}"


def encode_target(
    plan: ContentPlan, summary_text: str, markup: PlanMarkup = DEFAULT_MARKUP
) -> TargetSequence:
    """Serialize plan and summary into one training target."""
    if not summary_text:
        raise ValueError("summary_text must be non-empty")
    _check_markers(summary_text, "summary", markup)
    body = render_plan(plan, markup)
    section = (
        f"{markup.plan_mark} {body} {markup.summary_mark}"
        if body
        else f"{markup.plan_mark} {markup.summary_mark}"
    )
    text = f"{section} {summary_text}"
    plan_start = len(markup.plan_mark) + 1
    return TargetSequence(
        text=text,
        plan_span=(plan_start, plan_start + len(body)),
        summary_span=(len(section) + 1, len(text)),
    )


@dataclass(frozen=True)
class DecodedTarget:
    plan: ContentPlan
    summary: str
    warning: str | None = None


def _parse_cell(cell: str, variant: PlanVariant, markup: PlanMarkup) -> PlanEntity:
    if variant is PlanVariant.MIXED:
        parts = cell.split(markup.pair_sep)
        if len(parts) == 2 and parts[0] and parts[1]:
            return PlanEntity(src_label=parts[0], tgt_label=parts[1])
        # Malformed cell: keep it as a bare label so scoring still sees it.
        return PlanEntity(src_label=cell)
    if variant is PlanVariant.SRC_ONLY:
        return PlanEntity(src_label=cell)
    return PlanEntity(tgt_label=cell)


def decode_target(
    text: str, variant: PlanVariant = PlanVariant.MIXED, markup: PlanMarkup = DEFAULT_MARKUP
) -> DecodedTarget:
    """Best-effort inverse of encode_target over untrusted model output.

    Exact inverse on well-formed input. Without a summary marker the whole
    text counts as summary and the warning says so.
    """
    idx = text.find(markup.summary_mark)
    if idx < 0:
        return DecodedTarget(
            plan=ContentPlan(variant=variant),
            summary=text,
            warning="no summary marker in output",
        )
    summary = text[idx + len(markup.summary_mark) :]
    if summary.startswith(" "):
        summary = summary[1:]

    region = text[:idx]
    warning = None
    if region.startswith(markup.plan_mark):
        region = region[len(markup.plan_mark) :]
    else:
        warning = "no plan marker in output"
    if region.startswith(" "):
        region = region[1:]
    if region.endswith(" "):
        region = region[:-1]

    length_tag = None
    m = re.match(re.escape(markup.length_prefix) + r"([0-9]+)(?: |$)", region)
    if m:
        length_tag = int(m.group(1))
        region = region[m.end() :]

    if region:
        entities = tuple(
            _parse_cell(cell, variant, markup)
            for cell in region.split(markup.entity_sep)
            if cell
        )
    else:
        entities = ()
    plan = ContentPlan(entities=entities, variant=variant, length_tag=length_tag)
    return DecodedTarget(plan=plan, summary=summary, warning=warning)


def shuffle_plan(plan: ContentPlan, seed: int) -> ContentPlan:
    """Deterministic permutation of the plan's entities."""
    if not plan.entities:
        raise ValueError("cannot shuffle an empty plan")
    entities = list(plan.entities)
    random.Random(seed).shuffle(entities)
    return replace(plan, entities=tuple(entities))


def corrupt_plan(plan: ContentPlan, p: float, seed: int) -> ContentPlan:
    """Drop exactly floor(p*n) entities uniformly; survivors keep their order."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"corruption fraction must be in [0, 1], got {p}")
    n = len(plan.entities)
    # The epsilon keeps decimal fractions like 0.3*10 from flooring to 2.
    k = math.floor(p * n + 1e-9)
    if k == 0:
        return plan
    rng = random.Random(seed)
    dropped = set(rng.sample(range(n), k))
    survivors = tuple(e for i, e in enumerate(plan.entities) if i not in dropped)
    return replace(plan, entities=survivors)


def attach_length(plan: ContentPlan) -> ContentPlan:
    """Stamp the entity count; idempotent."""
    return replace(plan, length_tag=len(plan.entities))
