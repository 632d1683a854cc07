"""Rules 1-3 and the multi-turn re-ranking procedure."""

import random

import pytest

from comsync.rerank import (
    RerankConfig,
    RerankTarget,
    check_rule1,
    check_rule2,
    check_rule3,
    comment_edit_ratio,
    diagnose,
    multipass_order,
    novel_subtoken_ratio,
    rerank,
)
from comsync.textunits import subtokens_of
from conftest import (
    CASE_STUDY_CANDIDATES,
    CASE_STUDY_RULE2_RATIOS,
    CASE_STUDY_RULE3_RATIOS,
)


def oracle_multipass(violations, rules):
    """Independent repeated-stable-partition oracle."""
    order = list(range(len(violations)))
    for rule in sorted(rules):
        order = [i for i in order if rule not in violations[i]] + [i for i in order if rule in violations[i]]
    return order


def test_case_study_rule_ratios(case_study_target):
    for candidate, expected in zip(CASE_STUDY_CANDIDATES, CASE_STUDY_RULE2_RATIOS):
        _, ratio = check_rule2(case_study_target, candidate, 0.35)
        assert ratio == pytest.approx(expected, abs=1e-12)
    for candidate, expected in zip(CASE_STUDY_CANDIDATES, CASE_STUDY_RULE3_RATIOS):
        _, ratio, _ = check_rule3(case_study_target, candidate, 0.25)
        assert ratio == pytest.approx(expected, abs=1e-12)


def test_case_study_intermediate_orders(case_study_target):
    result = rerank(case_study_target, CASE_STUDY_CANDIDATES, RerankConfig(sigma=0.35, epsilon=0.25))
    assert result.intermediate_orders[1] == [0, 1, 3, 2]
    assert result.intermediate_orders[2] == [0, 1, 2, 3]
    assert result.intermediate_orders[3] == [1, 2, 0, 3]
    assert result.order == (1, 2, 0, 3)
    assert result.ranked[0] == CASE_STUDY_CANDIDATES[1]


def test_rule1_detects_stale_rename_token(case_study_target):
    violated, evidence = check_rule1(case_study_target, "Is the counter valid for usage ?")
    assert violated
    assert evidence == ("valid",)


def test_rule1_case_insensitive():
    target = RerankTarget(old_comment="Checks Valid state", old_function_name="isValid",
                          new_function_name="isActive")
    violated, evidence = check_rule1(target, "Still VALID here")
    assert violated and evidence == ("valid",)


def test_rule1_vacuous_when_name_unchanged():
    target = RerankTarget(old_comment="has valid data", old_function_name="isValid",
                          new_function_name="isValid")
    assert check_rule1(target, "still valid") == (False, ())
    absent = RerankTarget(old_comment="has valid data")
    assert check_rule1(absent, "still valid") == (False, ())


def test_rule1_requires_mention_in_old_comment():
    target = RerankTarget(old_comment="Returns the widget", old_function_name="getPanel",
                          new_function_name="getFrame")
    assert check_rule1(target, "Returns the panel widget") == (False, ())


def test_rule2_empty_candidate_violates():
    target = RerankTarget(old_comment="some words here")
    violated, ratio = check_rule2(target, "...", 0.35)
    assert violated
    assert ratio == 1.0


def test_rule2_boundary_equality_violates():
    # 7 novel of 20 sub-tokens: 7/20 is the same float as the 0.35 threshold.
    known = ["ka", "kb", "kc", "kd", "ke", "kf", "kg", "kh", "ki", "kj", "kk", "kl", "km"]
    novel = ["na", "nb", "nc", "nd", "ne", "nf", "ng"]
    old_comment = " ".join(known)
    candidate = " ".join(known + novel)
    target = RerankTarget(old_comment=old_comment)
    violated, ratio = check_rule2(target, candidate, 0.35)
    assert ratio == 0.35
    assert violated
    # And an exactly representable boundary: 1/2 against sigma 0.5.
    violated2, ratio2 = check_rule2(RerankTarget(old_comment="alpha"), "alpha beta", 0.5)
    assert ratio2 == 0.5
    assert violated2


def test_rule2_distinct_vs_occurrence_counting():
    target = RerankTarget(old_comment="alpha beta")
    candidate = "alpha novel novel novel"  # 3 novel occurrences, 1 distinct, 4 total
    _, occurrences = check_rule2(target, candidate, 0.9)
    assert occurrences == pytest.approx(0.75)
    _, distinct = check_rule2(target, candidate, 0.9, count_distinct=True)
    assert distinct == pytest.approx(0.25)


def test_rule3_identity_passes(case_study_target):
    violated, ratio, vacuous = check_rule3(case_study_target, case_study_target.old_comment, 0.25)
    assert not violated and ratio == 0.0 and not vacuous


def test_rule3_boundary_equality_violates():
    target = RerankTarget(old_comment="alpha beta gamma delta")  # 4 sub-tokens
    violated, ratio, _ = check_rule3(target, "alpha beta gamma other", 0.25)  # ED 1 -> 0.25
    assert ratio == 0.25
    assert violated


def test_rule3_vacuous_on_empty_old_comment():
    target = RerankTarget(old_comment="!!!")
    violated, ratio, vacuous = check_rule3(target, "anything", 0.25)
    assert not violated and vacuous and ratio == 0.0


def test_no_violations_keeps_order():
    target = RerankTarget(old_comment="alpha beta gamma delta")
    candidates = ["alpha beta gamma delta"] * 3
    result = rerank(target, candidates, RerankConfig(sigma=0.99, epsilon=5.0))
    assert result.order == (0, 1, 2)


def test_all_violating_same_rule_keeps_relative_order():
    target = RerankTarget(old_comment="alpha beta gamma delta")
    candidates = ["one two three four", "five six seven eight", "nine ten eleven twelve"]
    result = rerank(target, candidates, RerankConfig(sigma=0.1, epsilon=0.1))
    assert result.order == (0, 1, 2)
    assert all(d.violations == {2, 3} for d in result.diagnostics)


def test_disabled_rules_are_ignored(case_study_target):
    config = RerankConfig(sigma=0.35, epsilon=0.25, enabled_rules=frozenset({1}))
    result = rerank(case_study_target, CASE_STUDY_CANDIDATES, config)
    assert result.order == (0, 1, 3, 2)
    assert list(result.intermediate_orders) == [1]


def test_rerank_is_permutation_and_idempotent(case_study_target):
    result = rerank(case_study_target, CASE_STUDY_CANDIDATES)
    assert sorted(result.order) == [0, 1, 2, 3]
    again = rerank(case_study_target, list(result.ranked))
    assert list(again.ranked) == list(result.ranked)


def test_multipass_matches_oracle_on_random_matrices():
    rng = random.Random(99)
    for _ in range(2000):
        n = rng.randint(1, 8)
        violations = [frozenset(r for r in (1, 2, 3) if rng.random() < 0.4) for _ in range(n)]
        rules = sorted(rng.sample((1, 2, 3), rng.randint(1, 3)))
        order, intermediates = multipass_order(n, violations, rules)
        assert order == oracle_multipass(violations, rules)
        assert sorted(order) == list(range(n))
        assert list(intermediates) == rules


def test_nested_violation_sets_never_jump_ahead():
    # Exhaustive over all violation patterns for 4 candidates: if candidate
    # j violates a strict superset of candidate i's rules, j never precedes i.
    patterns = [frozenset(s) for s in ({}, {1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3})]
    for a in patterns:
        for b in patterns:
            for c in patterns:
                violations = [a, b, c]
                order, _ = multipass_order(3, violations, (1, 2, 3))
                position = {idx: pos for pos, idx in enumerate(order)}
                for i in range(3):
                    for j in range(3):
                        if violations[i] < violations[j]:
                            assert position[i] < position[j]


def test_config_validation_and_presets():
    with pytest.raises(ValueError):
        RerankConfig(sigma=0.0)
    with pytest.raises(ValueError):
        RerankConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        RerankConfig(enabled_rules=frozenset({4}))
    assert (RerankConfig.for_dataset("liu").sigma, RerankConfig.for_dataset("liu").epsilon) == (0.35, 0.25)
    assert (RerankConfig.for_dataset("panth").sigma, RerankConfig.for_dataset("panth").epsilon) == (0.35, 0.55)
    assert (RerankConfig.for_dataset("pai").sigma, RerankConfig.for_dataset("pai").epsilon) == (0.35, 0.2)


def test_ratio_helpers_shared_by_analysis():
    old = subtokens_of("alpha beta gamma", "comment")
    new = subtokens_of("alpha beta delta", "comment")
    assert novel_subtoken_ratio(old, new) == pytest.approx(1 / 3)
    assert comment_edit_ratio(old, new) == pytest.approx(1 / 3)


def test_diagnose_reports_all_rules(case_study_target):
    diag = diagnose(case_study_target, CASE_STUDY_CANDIDATES[3], RerankConfig())
    assert diag.violations == {2, 3}
    assert not diag.rule1_violated
    assert diag.rule2_ratio == pytest.approx(5 / 9)
    assert diag.rule3_ratio == pytest.approx(5 / 7)
