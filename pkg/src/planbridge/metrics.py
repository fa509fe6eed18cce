"""Evaluation suite: subword ROUGE-1/2/L, plan-entity F1, sentence-level
entailment aggregation, and paired bootstrap significance.

ROUGE here is computed over subword tokens from a pluggable tokenizer,
with ROUGE-L taken from a single longest-common-subsequence over the
full token sequences. Scores from different tokenizers are not
comparable; reports therefore record the tokenizer name.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

from .annotate import ContentPlan, PlanEntity, PlanVariant
from .corpus import CorpusPair
from .errors import AlignmentError, DataError, ScorerFailureError
from .sentences import RuleSentenceSplitter, SentenceSplitter
from .subword import SubwordTokenizer
from .transforms import DEFAULT_MARKUP, PlanMarkup, decode_target


def _f_score(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class RougeScores:
    rouge1: float
    rouge2: float
    rougeL: float

    def __post_init__(self):
        for v in (self.rouge1, self.rouge2, self.rougeL):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"score {v} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.rouge1, self.rouge2, self.rougeL)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _ngram_f1(cand: Sequence[str], ref: Sequence[str], n: int) -> float:
    cand_counts = _ngrams(cand, n)
    ref_counts = _ngrams(ref, n)
    if not cand_counts or not ref_counts:
        return 0.0
    overlap = sum((cand_counts & ref_counts).values())
    precision = overlap / sum(cand_counts.values())
    recall = overlap / sum(ref_counts.values())
    return _f_score(precision, recall)


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Length of the longest common subsequence, two-row dynamic program."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge(candidate: str, reference: str, tokenizer: SubwordTokenizer) -> RougeScores:
    """Clipped-count n-gram F1 for 1/2-grams plus LCS-based F1.

    Empty-vs-empty (no tokens on either side) scores 1.0 across the board,
    empty-vs-nonempty 0.0. An n-gram order with no n-grams on one side
    scores 0.0 for that order only.
    """
    cand = tokenizer.tokenize(candidate)
    ref = tokenizer.tokenize(reference)
    if not cand and not ref:
        return RougeScores(1.0, 1.0, 1.0)
    if not cand or not ref:
        return RougeScores(0.0, 0.0, 0.0)
    lcs = lcs_length(cand, ref)
    return RougeScores(
        rouge1=_ngram_f1(cand, ref, 1),
        rouge2=_ngram_f1(cand, ref, 2),
        rougeL=_f_score(lcs / len(cand), lcs / len(ref)),
    )


def _match_keys(entity: PlanEntity) -> frozenset[str]:
    labels = (entity.src_label, entity.tgt_label)
    return frozenset(
        unicodedata.normalize("NFC", label.casefold()) for label in labels if label
    )


def _entities_match(a: PlanEntity, b: PlanEntity) -> bool:
    if a.qid is not None and b.qid is not None:
        return a.qid == b.qid
    return bool(_match_keys(a) & _match_keys(b))


def _max_matching(pred: Sequence[PlanEntity], gold: Sequence[PlanEntity]) -> int:
    """Maximum bipartite matching size via augmenting paths."""
    owner: list[int] = [-1] * len(gold)

    def assign(i: int, visited: set[int]) -> bool:
        for j in range(len(gold)):
            if j in visited or not _entities_match(pred[i], gold[j]):
                continue
            visited.add(j)
            if owner[j] < 0 or assign(owner[j], visited):
                owner[j] = i
                return True
        return False

    return sum(1 for i in range(len(pred)) if assign(i, set()))


def plan_f1(predicted: ContentPlan, gold: ContentPlan) -> float:
    """Entity-set F1; qids match when both sides have one, labels otherwise.

    Matching is one-to-one: each predicted entity can satisfy at most one
    gold entity, so repeating a correct entity does not inflate recall.
    """
    if not predicted.entities and not gold.entities:
        return 1.0
    if not predicted.entities or not gold.entities:
        return 0.0
    matched = _max_matching(predicted.entities, gold.entities)
    precision = matched / len(predicted.entities)
    recall = matched / len(gold.entities)
    return _f_score(precision, recall)


class EntailmentScorer(Protocol):
    def score(self, premise: str, hypothesis: str) -> float:
        ...


class HttpEntailmentScorer:
    """POSTs premise/hypothesis pairs to an NLI service."""

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self._timeout = timeout

    def score(self, premise: str, hypothesis: str) -> float:
        import requests

        resp = requests.post(
            self.endpoint + "/score",
            json={"premise": premise, "hypothesis": hypothesis},
            timeout=self._timeout,
        )
        resp.raise_for_status()
        return float(resp.json()["score"])


def entailment_score(
    document: str,
    summary: str,
    scorer: EntailmentScorer,
    splitter: SentenceSplitter | None = None,
) -> float:
    """Mean per-sentence entailment of the summary against the whole document."""
    if not summary.strip():
        raise ValueError("summary must be non-empty")
    splitter = splitter or RuleSentenceSplitter()
    sentences = splitter.split(summary)
    if not sentences:
        raise ValueError("sentence splitter returned nothing for a non-empty summary")
    scores = []
    for i, sentence in enumerate(sentences):
        try:
            value = scorer.score(document, sentence)
        except Exception as exc:
            raise ScorerFailureError(i, str(exc)) from exc
        if not 0.0 <= value <= 1.0:
            raise ScorerFailureError(i, f"score {value} outside [0, 1]")
        scores.append(value)
    return sum(scores) / len(scores)


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    significant: bool
    resamples: int
    alpha: float


def paired_bootstrap(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    resamples: int = 10000,
    alpha: float = 0.05,
    seed: int = 0,
) -> BootstrapResult:
    """One-sided paired bootstrap: p = share of resamples where b's mean >= a's.

    System a is the candidate claimed better; small p rejects "b is at
    least as good". Deterministic for a fixed seed.
    """
    if len(scores_a) != len(scores_b):
        raise DataError(
            f"paired scores differ in length: {len(scores_a)} vs {len(scores_b)}"
        )
    n = len(scores_a)
    if n <= 1:
        raise ValueError("need more than one paired score")
    if resamples < 1000:
        raise ValueError("fewer than 1000 resamples gives an unstable p-value")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    chunk = max(1, min(resamples, 4_000_000 // max(n, 1)))
    while done < resamples:
        rows = min(chunk, resamples - done)
        idx = rng.integers(0, n, size=(rows, n))
        hits += int(np.count_nonzero(b[idx].mean(axis=1) >= a[idx].mean(axis=1)))
        done += rows
    p = hits / resamples
    return BootstrapResult(p_value=p, significant=p < alpha, resamples=resamples, alpha=alpha)


@dataclass(frozen=True)
class MetricReport:
    rouge1: float
    rouge2: float
    rougeL: float
    xnli: float | None
    plan_f1: float | None
    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("metric report needs at least one example")
        for v in (self.rouge1, self.rouge2, self.rougeL, self.xnli, self.plan_f1):
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"score {v} outside [0, 1]")

    def to_obj(self) -> dict:
        return {
            "rouge1": self.rouge1,
            "rouge2": self.rouge2,
            "rougeL": self.rougeL,
            "xnli": self.xnli,
            "plan_f1": self.plan_f1,
            "n": self.n,
        }


@dataclass(frozen=True)
class RunReport:
    pairs: tuple[tuple[str, MetricReport], ...]
    overall: MetricReport
    tokenizer: str

    def to_obj(self) -> dict:
        return {
            "tokenizer": self.tokenizer,
            "pairs": {name: report.to_obj() for name, report in self.pairs},
            "overall": self.overall.to_obj(),
        }


_SCORE_SCHEMA = {"type": ["number", "null"], "minimum": 0, "maximum": 1}
_REPORT_ENTRY_SCHEMA = {
    "type": "object",
    "properties": {
        "rouge1": {"type": "number", "minimum": 0, "maximum": 1},
        "rouge2": {"type": "number", "minimum": 0, "maximum": 1},
        "rougeL": {"type": "number", "minimum": 0, "maximum": 1},
        "xnli": _SCORE_SCHEMA,
        "plan_f1": _SCORE_SCHEMA,
        "n": {"type": "integer", "minimum": 1},
    },
    "required": ["rouge1", "rouge2", "rougeL", "xnli", "plan_f1", "n"],
    "additionalProperties": False,
}

# Published shape of the evaluation report JSON.
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tokenizer": {"type": "string"},
        "pairs": {
            "type": "object",
            "patternProperties": {r"^[a-z]{2}-[a-z]{2}$": _REPORT_ENTRY_SCHEMA},
            "additionalProperties": False,
        },
        "overall": _REPORT_ENTRY_SCHEMA,
    },
    "required": ["tokenizer", "pairs", "overall"],
    "additionalProperties": False,
}


def _align(predictions: Mapping[str, str], pair: CorpusPair) -> None:
    ref_ids = set(pair.doc_ids())
    pred_ids = set(predictions)
    if ref_ids != pred_ids:
        raise AlignmentError(missing=ref_ids - pred_ids, extra=pred_ids - ref_ids)


def _labels_in_text(plan: ContentPlan, text: str) -> ContentPlan:
    """Entities of the gold plan whose labels occur verbatim in the text."""
    folded = unicodedata.normalize("NFC", text.casefold())
    found = tuple(
        e for e in plan.entities if any(k in folded for k in _match_keys(e))
    )
    return ContentPlan(entities=found, variant=plan.variant)


def evaluate_pair(
    predictions: Mapping[str, str],
    pair: CorpusPair,
    tokenizer: SubwordTokenizer,
    *,
    markup: PlanMarkup = DEFAULT_MARKUP,
    scorer: EntailmentScorer | None = None,
    splitter: SentenceSplitter | None = None,
    plan_f1_mode: str = "decoded",
) -> MetricReport:
    """Mean metrics over one direction's examples.

    When the references carry plans, predictions are treated as full
    target sequences: the plan section is decoded off the front and the
    summary metrics use only the summary part. plan_f1_mode picks how
    predicted entities are found: "decoded" reads them from the decoded
    plan section, "summary" string-matches gold labels in the predicted
    summary text (a coverage measure, flagged as such).
    """
    if plan_f1_mode not in ("decoded", "summary"):
        raise ValueError(f"unknown plan_f1_mode {plan_f1_mode!r}")
    if not pair.examples:
        raise ValueError("cannot evaluate an empty pair")
    _align(predictions, pair)
    splitter = splitter or RuleSentenceSplitter(lang=pair.tgt_lang)

    has_plans = any(ex.plan is not None for ex in pair.examples)
    default_variant = next(
        (ex.plan.variant for ex in pair.examples if ex.plan is not None),
        PlanVariant.MIXED,
    )
    r1 = r2 = rl = 0.0
    f1_total = 0.0
    f1_count = 0
    xnli_total = 0.0
    xnli_count = 0
    for ex in pair.examples:
        raw = predictions[ex.doc_id]
        if has_plans:
            variant = ex.plan.variant if ex.plan is not None else default_variant
            decoded = decode_target(raw, variant=variant, markup=markup)
        else:
            decoded = None
        candidate = decoded.summary if decoded is not None else raw
        scores = rouge(candidate, ex.summary.text, tokenizer)
        r1 += scores.rouge1
        r2 += scores.rouge2
        rl += scores.rougeL
        if ex.plan is not None:
            if plan_f1_mode == "decoded":
                predicted_plan = decoded.plan
            else:
                predicted_plan = _labels_in_text(ex.plan, candidate)
            f1_total += plan_f1(predicted_plan, ex.plan)
            f1_count += 1
        if scorer is not None:
            xnli_total += entailment_score(
                ex.document.plain_text(), candidate, scorer, splitter
            )
            xnli_count += 1
    n = len(pair.examples)
    return MetricReport(
        rouge1=r1 / n,
        rouge2=r2 / n,
        rougeL=rl / n,
        xnli=xnli_total / xnli_count if xnli_count else None,
        plan_f1=f1_total / f1_count if f1_count else None,
        n=n,
    )


def _mean_or_none(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return sum(present) / len(present) if present else None


def evaluate_run(
    predictions: Mapping[tuple[str, str], Mapping[str, str]],
    references: Mapping[tuple[str, str], CorpusPair],
    tokenizer: SubwordTokenizer,
    **kwargs,
) -> RunReport:
    """Per-direction reports plus their unweighted average."""
    if set(predictions) != set(references):
        raise AlignmentError(
            missing={f"{s}-{t}" for s, t in set(references) - set(predictions)},
            extra={f"{s}-{t}" for s, t in set(predictions) - set(references)},
        )
    if not references:
        raise ValueError("no directions to evaluate")
    pair_reports: list[tuple[str, MetricReport]] = []
    for key in sorted(references):
        report = evaluate_pair(predictions[key], references[key], tokenizer, **kwargs)
        pair_reports.append((f"{key[0]}-{key[1]}", report))
    reports = [r for _, r in pair_reports]
    overall = MetricReport(
        rouge1=sum(r.rouge1 for r in reports) / len(reports),
        rouge2=sum(r.rouge2 for r in reports) / len(reports),
        rougeL=sum(r.rougeL for r in reports) / len(reports),
        xnli=_mean_or_none([r.xnli for r in reports]),
        plan_f1=_mean_or_none([r.plan_f1 for r in reports]),
        n=sum(r.n for r in reports),
    )
    return RunReport(pairs=tuple(pair_reports), overall=overall, tokenizer=tokenizer.name)


def example_scores(
    predictions: Mapping[str, str],
    pair: CorpusPair,
    tokenizer: SubwordTokenizer,
    metric: str = "rougeL",
    markup: PlanMarkup = DEFAULT_MARKUP,
) -> list[float]:
    """Per-example scores in doc_id order, for significance testing."""
    _align(predictions, pair)
    has_plans = any(ex.plan is not None for ex in pair.examples)
    by_id = {ex.doc_id: ex for ex in pair.examples}
    out = []
    for doc_id in sorted(by_id):
        ex = by_id[doc_id]
        raw = predictions[doc_id]
        candidate = decode_target(raw, markup=markup).summary if has_plans else raw
        scores = rouge(candidate, ex.summary.text, tokenizer)
        if metric == "rouge1":
            out.append(scores.rouge1)
        elif metric == "rouge2":
            out.append(scores.rouge2)
        elif metric == "rougeL":
            out.append(scores.rougeL)
        elif metric == "plan_f1":
            if ex.plan is None:
                raise DataError(f"{doc_id}: no gold plan for plan_f1 scoring")
            out.append(plan_f1(decode_target(raw, variant=ex.plan.variant, markup=markup).plan, ex.plan))
        else:
            raise ValueError(f"unknown metric {metric!r}")
    return out
