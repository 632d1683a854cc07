"""Metrics, trial aggregation, and corpus analysis."""

import random
import statistics

import pytest

from comsync.evaluate import (
    MissingReference,
    TargetResult,
    aggregate_trials,
    analyze_corpus,
    exact_match,
    score_corpus,
)
from comsync.rerank import novel_subtoken_ratio
from comsync.samples import CCSample
from comsync.textunits import subtokens_of
from conftest import make_corpus


def target(i, old_comment, reference):
    return CCSample(
        id=f"m{i}",
        old_code="int a() {\n    return x;\n}",
        new_code="int a() {\n    return y;\n}",
        old_comment=old_comment,
        language="java",
        new_comment=reference,
    )


def test_exact_match_identical():
    assert exact_match("map of registry", "map of registry")


def test_exact_match_ignores_whitespace():
    assert exact_match("map of registry", "map  of registry")
    assert exact_match("map of registry", " map of\tregistry ")


def test_exact_match_wording_differs():
    assert not exact_match("the value is not valid", "the value no valid")
    assert not exact_match("Map of registry", "map of registry")  # case-sensitive


def test_score_counting():
    results = [
        TargetResult(target(0, "old a", "ref a"), ("ref a", "x", "x", "x", "x")),
        TargetResult(target(1, "old b", "ref b"), ("ref b", "x")),
        TargetResult(target(2, "old c", "ref c"), ("x", "y", "ref c")),
        TargetResult(target(3, "old d", "ref d"), ("x", "y")),
    ]
    report = score_corpus(results)
    assert report.accuracy == 0.5
    assert report.recall_at_5 == 0.75
    assert report.records[2].matched_at == 3
    assert report.records[3].matched_at is None


def test_all_top1_correct_boundary():
    results = [
        TargetResult(target(0, "same text", "same text"), ("same text",)),
        TargetResult(target(1, "old text", "new text"), ("new text",)),
    ]
    report = score_corpus(results)
    assert report.accuracy == report.recall_at_5 == 1.0
    # ESS counts only the target whose old comment differed from the reference.
    assert report.ess_ratio == 0.5


def test_ess_counts_strict_improvement():
    sample = target(0, "Returns a hashtable containing the default validators .",
                    "Returns a map containing the default validators .")
    hit = TargetResult(sample, ("Returns a map containing the default validators .",))
    report = score_corpus([hit])
    assert report.ess_ratio == 1.0
    assert report.records[0].ed_diff == -1
    unchanged = TargetResult(sample, (sample.old_comment,))
    assert score_corpus([unchanged]).ess_ratio == 0.0


def test_match_beyond_rank_5_does_not_count():
    candidates = ("a", "b", "c", "d", "e", "the reference")
    report = score_corpus([TargetResult(target(0, "old", "the reference"), candidates)])
    assert report.recall_at_5 == 0.0


def test_shuffling_below_rank_5_is_irrelevant():
    rng = random.Random(5)
    base = ["c1", "c2", "the ref", "c4", "c5", "t1", "t2", "t3"]
    sample = target(0, "old comment", "the ref")
    expected = score_corpus([TargetResult(sample, tuple(base))])
    for _ in range(10):
        tail = base[5:]
        rng.shuffle(tail)
        shuffled = tuple(base[:5] + tail)
        report = score_corpus([TargetResult(sample, shuffled)])
        assert report.metrics() == expected.metrics()


def test_missing_reference_raises():
    sample = CCSample(id="x", old_code="a", new_code="b", old_comment="c", language="java")
    with pytest.raises(MissingReference):
        score_corpus([TargetResult(sample, ("y",))])


def test_order_of_targets_is_irrelevant():
    results = [
        TargetResult(target(i, f"old {i}", f"ref {i}"), (f"ref {i}",) if i % 2 else ("miss",))
        for i in range(6)
    ]
    forward = score_corpus(results)
    backward = score_corpus(list(reversed(results)))
    assert forward.metrics() == backward.metrics()


def test_accuracy_never_exceeds_recall():
    rng = random.Random(13)
    for _ in range(300):
        results = []
        for i in range(rng.randint(1, 6)):
            reference = f"ref {i}"
            candidates = [f"noise {j}" for j in range(rng.randint(1, 6))]
            if rng.random() < 0.5:
                candidates.insert(rng.randrange(len(candidates) + 1), reference)
            results.append(TargetResult(target(i, f"old {i}", reference), tuple(candidates)))
        report = score_corpus(results)
        assert 0.0 <= report.accuracy <= report.recall_at_5 <= 1.0


def test_aggregate_two_trials():
    trials = [
        score_corpus([TargetResult(target(0, "o", "r"), ("r",)), TargetResult(target(1, "o", "r"), ("x",))]),
        score_corpus([TargetResult(target(0, "o", "r"), ("r",)), TargetResult(target(1, "o", "r"), ("r",))]),
    ]
    # accuracies 0.5 and 1.0
    report = aggregate_trials(trials)
    assert report.mean["accuracy"] == pytest.approx(0.75)
    assert report.std["accuracy"] == pytest.approx(0.25)


def test_aggregate_single_trial_std_zero():
    trial = score_corpus([TargetResult(target(0, "o", "r"), ("r",))])
    report = aggregate_trials([trial])
    assert report.std == {"accuracy": 0.0, "recall_at_5": 0.0, "ess_ratio": 0.0}


def test_aggregate_matches_statistics_module():
    rng = random.Random(21)
    trials = []
    for _ in range(5):
        results = [
            TargetResult(target(i, f"old {i}", f"ref {i}"),
                         ((f"ref {i}",) if rng.random() < 0.6 else ("miss",)))
            for i in range(10)
        ]
        trials.append(score_corpus(results))
    report = aggregate_trials(trials)
    values = [t.accuracy for t in trials]
    assert report.mean["accuracy"] == pytest.approx(statistics.fmean(values))
    assert report.std["accuracy"] == pytest.approx(statistics.pstdev(values))


def test_analyze_identity_corpus():
    corpus = [target(i, f"words here {i}", f"words here {i}") for i in range(5)]
    analysis = analyze_corpus(corpus)
    assert analysis.propagation_rate is None
    assert analysis.propagation_subset == 0
    assert analysis.new_subtoken_histogram[0].count == 5
    assert analysis.new_subtoken_share_below_04 == 1.0
    assert analysis.edit_ratio_share_below_06 == 1.0
    assert sum(b.share for b in analysis.new_subtoken_histogram) == pytest.approx(1.0)


def test_analyze_hand_built_corpus():
    """Ten samples with hand-counted shares."""
    renamed = CCSample(
        id="r1",
        old_code="public int getConversationPanel() {\n    return p;\n}",
        new_code="public int getMessageTimestamp() {\n    return p;\n}",
        old_comment="Gets the conversation panel .",
        new_comment="Gets the message timestamp .",  # rename propagated
        language="java",
    )
    stale = CCSample(
        id="r2",
        old_code="public int getConversationPanel() {\n    return p;\n}",
        new_code="public int getMessageTimestamp() {\n    return p;\n}",
        old_comment="Gets the conversation panel .",
        new_comment="Gets the conversation panel now .",  # rename ignored
        language="java",
    )
    unchanged = [target(i, "alpha beta gamma delta", "alpha beta gamma delta") for i in range(4)]
    small_edit = [
        target(10 + i, "alpha beta gamma delta", "alpha beta gamma epsilon") for i in range(2)
    ]  # 1/4 novel, ED 1/4
    rewrite = [
        target(20 + i, "alpha beta", "completely different words here") for i in range(2)
    ]  # 4/4 novel, ED 4/2 = 2.0
    corpus = [renamed, stale] + unchanged + small_edit + rewrite
    analysis = analyze_corpus(corpus)

    assert analysis.propagation_subset == 2
    assert analysis.propagation_rate == pytest.approx(0.5)
    # new-sub-token ratios: renamed 2/4, stale 1/5, 4x 0, 2x 1/4, 2x 4/4 -> below 0.4: stale+4+2 = 7/10
    assert analysis.new_subtoken_covered == 10
    assert analysis.new_subtoken_share_below_04 == pytest.approx(0.7)
    # edit ratios: renamed 2/4, stale 1/4, 4x 0, 2x 1/4, 2x 4/2 -> below 0.6: 8/10
    assert analysis.edit_ratio_share_below_06 == pytest.approx(0.8)
    overflow = analysis.edit_ratio_histogram[-1]
    assert overflow.count == 2  # the two rewrites exceed ratio 1


def test_analyze_requires_references():
    sample = CCSample(id="x", old_code="a", new_code="b", old_comment="c", language="java")
    with pytest.raises(MissingReference):
        analyze_corpus([sample])


def test_analysis_shares_rule_ratio_code_path():
    corpus = make_corpus(10, seed=77)
    analysis = analyze_corpus(corpus)
    values = []
    for sample in corpus:
        old = subtokens_of(sample.old_comment, "comment")
        new = subtokens_of(sample.new_comment, "comment")
        if len(new) > 0:
            values.append(novel_subtoken_ratio(old, new))
    assert analysis.new_subtoken_covered == len(values)
    assert analysis.new_subtoken_share_below_04 == pytest.approx(
        sum(1 for v in values if v < 0.4) / len(values)
    )
