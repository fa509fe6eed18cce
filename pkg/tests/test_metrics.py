"""Metric suite: ROUGE, plan F1, entailment aggregation, bootstrap, reports."""
import itertools
import random

import jsonschema
import pytest

from planbridge.annotate import ContentPlan, PlanEntity, PlanVariant, annotate_pair
from planbridge.corpus import CorpusPair
from planbridge.errors import AlignmentError, DataError, ScorerFailureError
from planbridge.metrics import (
    REPORT_SCHEMA,
    HttpEntailmentScorer,
    MetricReport,
    entailment_score,
    evaluate_pair,
    evaluate_run,
    example_scores,
    lcs_length,
    paired_bootstrap,
    plan_f1,
    rouge,
)
from planbridge.subword import WordBoundaryTokenizer
from planbridge.transforms import DEFAULT_MARKUP, encode_target

import oracles
from conftest import make_linked_example, make_synthetic_kb

TOK = WordBoundaryTokenizer()


def test_rouge_identity_scores_one():
    scores = rouge("the cat sat", "the cat sat", TOK)
    assert scores.as_tuple() == (1.0, 1.0, 1.0)


def test_rouge_disjoint_scores_zero():
    scores = rouge("alpha beta", "gamma delta", TOK)
    assert scores.as_tuple() == (0.0, 0.0, 0.0)


def test_rouge_is_case_insensitive():
    assert rouge("The CAT", "the cat", TOK).as_tuple() == (1.0, 1.0, 1.0)


def test_rouge_both_empty_is_perfect_by_convention():
    assert rouge("", "", TOK).as_tuple() == (1.0, 1.0, 1.0)
    assert rouge("...", "—", TOK).as_tuple() == (1.0, 1.0, 1.0)


def test_rouge_one_side_empty_scores_zero():
    assert rouge("", "the cat", TOK).as_tuple() == (0.0, 0.0, 0.0)
    assert rouge("the cat", "", TOK).as_tuple() == (0.0, 0.0, 0.0)


def test_rouge_single_token_sides_have_no_bigrams():
    scores = rouge("cat", "cat", TOK)
    assert scores.rouge1 == 1.0
    assert scores.rouge2 == 0.0
    assert scores.rougeL == 1.0


def test_rouge_l_orders_matter():
    # common subsequence "a b d" (or "a c d"): 3 of 4 tokens
    scores = rouge("a c b d", "a b c d", TOK)
    assert scores.rougeL == pytest.approx(0.75)
    assert scores.rouge1 == 1.0
    assert scores.rouge2 == 0.0


def test_rouge_clipped_counts():
    # candidate repeats "the" three times, reference has it once
    scores = rouge("the the the", "the cat", TOK)
    precision = 1 / 3
    recall = 1 / 2
    assert scores.rouge1 == pytest.approx(2 * precision * recall / (precision + recall))


def test_lcs_matches_full_table_oracle_on_random_sequences():
    rng = random.Random(4)
    for _ in range(2000):
        a = [rng.randint(0, 5) for _ in range(rng.randint(0, 14))]
        b = [rng.randint(0, 5) for _ in range(rng.randint(0, 14))]
        assert lcs_length(a, b) == oracles.lcs_full_table(a, b)


def test_rouge_ngram_f1_matches_count_oracle():
    rng = random.Random(9)
    vocab = ["alpha", "beta", "gamma", "delta", "eps"]
    for _ in range(500):
        cand = " ".join(rng.choices(vocab, k=rng.randint(0, 10)))
        ref = " ".join(rng.choices(vocab, k=rng.randint(0, 10)))
        got = rouge(cand, ref, TOK)
        cand_toks, ref_toks = cand.split(), ref.split()
        if not cand_toks and not ref_toks:
            continue
        if not cand_toks or not ref_toks:
            continue
        assert got.rouge1 == pytest.approx(oracles.ngram_f1_counts(cand_toks, ref_toks, 1))
        assert got.rouge2 == pytest.approx(oracles.ngram_f1_counts(cand_toks, ref_toks, 2))


def entity(src="", tgt="", qid=None):
    return PlanEntity(src_label=src, tgt_label=tgt, qid=qid)


def test_plan_f1_identical_plans():
    plan = ContentPlan(entities=(entity("a", "b", "Q1"), entity("c", "d", "Q2")))
    assert plan_f1(plan, plan) == 1.0


def test_plan_f1_empty_conventions():
    empty = ContentPlan()
    full = ContentPlan(entities=(entity("a"),))
    assert plan_f1(empty, empty) == 1.0
    assert plan_f1(empty, full) == 0.0
    assert plan_f1(full, empty) == 0.0


def test_plan_f1_qid_wins_over_labels():
    predicted = ContentPlan(entities=(entity("same label", qid="Q1"),))
    gold = ContentPlan(entities=(entity("same label", qid="Q2"),))
    assert plan_f1(predicted, gold) == 0.0


def test_plan_f1_label_fallback_casefolds():
    predicted = ContentPlan(entities=(entity(src="Dark Matter"),))
    gold = ContentPlan(entities=(entity(src="dark matter", qid="Q47492"),))
    assert plan_f1(predicted, gold) == 1.0


def test_plan_f1_is_one_to_one():
    # two predicted copies cannot both claim the single gold entity
    predicted = ContentPlan(entities=(entity(src="x"), entity(tgt="x")))
    gold = ContentPlan(entities=(entity(src="x", qid="Q1"),))
    f1 = plan_f1(predicted, gold)
    precision, recall = 1 / 2, 1 / 1
    assert f1 == pytest.approx(2 * precision * recall / (precision + recall))


def random_label_plan(rng):
    labels = ["alpha", "beta", "gamma", "delta", "epsilon"]
    entities = []
    used_qids = set()
    for _ in range(rng.randint(0, 4)):
        qid = None
        if rng.random() < 0.5:
            qid = f"Q{rng.randint(1, 6)}"
            if qid in used_qids:
                qid = None
            else:
                used_qids.add(qid)
        entities.append(
            PlanEntity(
                src_label=rng.choice(labels),
                tgt_label=rng.choice(labels + [""]),
                qid=qid,
            )
        )
    return ContentPlan(entities=tuple(entities))


def test_plan_f1_matches_brute_force_on_random_plans():
    rng = random.Random(11)
    for _ in range(1500):
        a, b = random_label_plan(rng), random_label_plan(rng)
        assert plan_f1(a, b) == pytest.approx(oracles.plan_f1_brute(a, b), abs=1e-12)


class TableScorer:
    """Stub entailment scorer with a fixed per-sentence score table."""

    def __init__(self, table, default=0.5):
        self.table = table
        self.default = default
        self.calls = []

    def score(self, premise, hypothesis):
        self.calls.append(hypothesis)
        return self.table.get(hypothesis, self.default)


def test_entailment_mean_is_hand_computable():
    summary = "First claim. Second claim. Third claim."
    scorer = TableScorer({"First claim.": 0.9, "Second claim.": 0.6, "Third claim.": 0.3})
    got = entailment_score("the document", summary, scorer)
    assert got == pytest.approx((0.9 + 0.6 + 0.3) / 3, abs=1e-12)


def test_entailment_is_invariant_under_sentence_permutation():
    sentences = ["Alpha here.", "Beta there.", "Gamma gone.", "Delta done."]
    table = {s: 0.1 + 0.2 * i for i, s in enumerate(sentences)}
    values = set()
    for perm in itertools.permutations(sentences):
        scorer = TableScorer(table)
        values.add(round(entailment_score("doc", " ".join(perm), scorer), 15))
    assert len(values) == 1


def test_entailment_rejects_empty_summary():
    with pytest.raises(ValueError):
        entailment_score("doc", "   ", TableScorer({}))


def test_entailment_failure_carries_sentence_index():
    class Boom:
        def score(self, premise, hypothesis):
            if "Second" in hypothesis:
                raise RuntimeError("backend down")
            return 0.5

    with pytest.raises(ScorerFailureError) as err:
        entailment_score("doc", "First one. Second one. Third one.", Boom())
    assert err.value.sentence_index == 1


def test_entailment_rejects_out_of_range_scores():
    with pytest.raises(ScorerFailureError):
        entailment_score("doc", "Only sentence.", TableScorer({}, default=1.5))


def test_http_entailment_scorer_round_trip(stub_server):
    server = stub_server(
        {"/score": lambda req: {"score": 0.75 if "cat" in req["hypothesis"] else 0.25}}
    )
    scorer = HttpEntailmentScorer(server.url)
    assert scorer.score("premise text", "the cat sat") == 0.75
    assert scorer.score("premise text", "dogs bark") == 0.25
    assert server.requests[0][1]["premise"] == "premise text"


def test_bootstrap_identical_vectors_never_significant():
    scores = [0.42, 0.5, 0.61, 0.3, 0.77, 0.18]
    result = paired_bootstrap(scores, scores, resamples=2000, seed=7)
    assert result.p_value == 1.0
    assert not result.significant


def test_bootstrap_is_deterministic_for_a_seed():
    rng = random.Random(5)
    a = [rng.random() for _ in range(30)]
    b = [x * 0.9 for x in a]
    r1 = paired_bootstrap(a, b, resamples=2000, seed=123)
    r2 = paired_bootstrap(a, b, resamples=2000, seed=123)
    assert r1 == r2


def test_bootstrap_detects_a_clear_win():
    rng = random.Random(6)
    a = [0.6 + rng.uniform(0, 0.05) for _ in range(40)]
    b = [0.3 + rng.uniform(0, 0.05) for _ in range(40)]
    result = paired_bootstrap(a, b, resamples=2000, seed=1, alpha=0.05)
    assert result.p_value < 0.05
    assert result.significant


def test_bootstrap_agrees_with_independent_resampler():
    rng = random.Random(2024)
    a = [round(rng.uniform(0.2, 0.6), 6) for _ in range(48)]
    b = [round(x + rng.uniform(-0.05, 0.05), 6) for x in a]
    ours = paired_bootstrap(a, b, resamples=20000, seed=777).p_value
    theirs = oracles.bootstrap_p_stdlib(a, b, resamples=20000, seed=777)
    assert ours == pytest.approx(theirs, abs=0.01)


def test_bootstrap_input_validation():
    with pytest.raises(DataError):
        paired_bootstrap([0.1, 0.2], [0.1], resamples=1000)
    with pytest.raises(ValueError):
        paired_bootstrap([0.1], [0.2], resamples=1000)
    with pytest.raises(ValueError):
        paired_bootstrap([0.1, 0.2], [0.3, 0.4], resamples=10)
    with pytest.raises(ValueError):
        paired_bootstrap([0.1, 0.2], [0.3, 0.4], resamples=1000, alpha=1.5)


def annotated_pair(n=4):
    kb = make_synthetic_kb(8)
    examples = [make_linked_example(f"d{i}", [i, (i + 1) % 8]) for i in range(n)]
    pair = CorpusPair(src_lang="en", tgt_lang="cs", examples=tuple(examples))
    annotated, gaps = annotate_pair(pair, kb)
    assert not gaps
    return annotated


def perfect_predictions(pair):
    return {
        ex.doc_id: encode_target(ex.plan, ex.summary.text, DEFAULT_MARKUP).text
        for ex in pair.examples
    }


def test_evaluate_pair_perfect_predictions():
    pair = annotated_pair()
    report = evaluate_pair(perfect_predictions(pair), pair, TOK)
    assert report.rouge1 == pytest.approx(1.0)
    assert report.rougeL == pytest.approx(1.0)
    assert report.plan_f1 == pytest.approx(1.0)
    assert report.xnli is None
    assert report.n == 4


def test_evaluate_pair_decodes_before_scoring_summaries():
    # identical summaries, garbage plan section: summary metrics stay perfect
    pair = annotated_pair()
    predictions = {
        ex.doc_id: f"[PLAN] wrong & blbost [SUMMARY] {ex.summary.text}"
        for ex in pair.examples
    }
    report = evaluate_pair(predictions, pair, TOK)
    assert report.rouge1 == pytest.approx(1.0)
    assert report.plan_f1 < 1.0


def test_evaluate_pair_summary_mode_measures_label_coverage():
    pair = annotated_pair()
    predictions = perfect_predictions(pair)
    report = evaluate_pair(predictions, pair, TOK, plan_f1_mode="summary")
    # synthetic summaries literally contain the target-language labels
    assert report.plan_f1 == pytest.approx(1.0)


def test_evaluate_pair_alignment_mismatch():
    pair = annotated_pair()
    predictions = perfect_predictions(pair)
    predictions.pop("d0")
    predictions["ghost"] = "[PLAN] [SUMMARY] x"
    with pytest.raises(AlignmentError) as err:
        evaluate_pair(predictions, pair, TOK)
    assert err.value.missing == frozenset({"d0"})
    assert err.value.extra == frozenset({"ghost"})


def test_evaluate_pair_with_entailment_scorer():
    pair = annotated_pair(n=2)
    scorer = TableScorer({}, default=0.8)
    report = evaluate_pair(perfect_predictions(pair), pair, TOK, scorer=scorer)
    assert report.xnli == pytest.approx(0.8)
    assert scorer.calls, "scorer should have been consulted"


def test_evaluate_run_averages_directions_unweighted():
    pair_a = annotated_pair(n=2)
    pair_b = annotated_pair(n=4)
    predictions = {
        ("en", "cs"): perfect_predictions(pair_a),
        ("en", "de"): {
            ex.doc_id: "[PLAN] [SUMMARY] completely unrelated words"
            for ex in pair_b.examples
        },
    }
    references = {("en", "cs"): pair_a, ("en", "de"): pair_b}
    run = evaluate_run(predictions, references, TOK)
    assert run.overall.n == 6
    names = [name for name, _ in run.pairs]
    assert names == ["en-cs", "en-de"]
    by_name = dict(run.pairs)
    expected = (by_name["en-cs"].rouge1 + by_name["en-de"].rouge1) / 2
    assert run.overall.rouge1 == pytest.approx(expected)


def test_evaluate_run_requires_matching_directions():
    pair = annotated_pair(n=2)
    with pytest.raises(AlignmentError):
        evaluate_run({}, {("en", "cs"): pair}, TOK)


def test_run_report_validates_against_published_schema():
    pair = annotated_pair(n=3)
    run = evaluate_run(
        {("en", "cs"): perfect_predictions(pair)}, {("en", "cs"): pair}, TOK
    )
    jsonschema.validate(run.to_obj(), REPORT_SCHEMA)


def test_metric_report_bounds():
    with pytest.raises(ValueError):
        MetricReport(rouge1=1.2, rouge2=0, rougeL=0, xnli=None, plan_f1=None, n=1)
    with pytest.raises(ValueError):
        MetricReport(rouge1=0.5, rouge2=0, rougeL=0, xnli=None, plan_f1=None, n=0)


def test_example_scores_sorted_by_doc_id():
    pair = annotated_pair(n=3)
    predictions = perfect_predictions(pair)
    scores = example_scores(predictions, pair, TOK, metric="rougeL")
    assert scores == [pytest.approx(1.0)] * 3
    f1 = example_scores(predictions, pair, TOK, metric="plan_f1")
    assert f1 == [pytest.approx(1.0)] * 3
    with pytest.raises(ValueError):
        example_scores(predictions, pair, TOK, metric="bleu")
