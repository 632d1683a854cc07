"""Multi-turn re-ranking of candidate new comments.

Three rules, weak to severe, each applied as a stable partition that moves
violators to the end while preserving relative order:

  1. a sub-token dropped from a renamed function, mentioned in the old
     comment, must not survive in the candidate;
  2. the ratio of novel candidate sub-tokens must stay strictly below sigma;
  3. the edit distance to the old comment, relative to the old comment's
     sub-token count, must stay strictly below epsilon.

Equality with a threshold is a violation: a rule passes only under strict
inequality.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .changes import extract_function_name, removed_name_subtokens
from .samples import CCSample
from .textunits import SubTokenSeq, edit_distance, subtokens_of

logger = logging.getLogger(__name__)

DATASET_THRESHOLDS = {
    "liu": (0.35, 0.25),
    "panth": (0.35, 0.55),
    "pai": (0.35, 0.2),
}

ALL_RULES = frozenset({1, 2, 3})


@dataclass(frozen=True)
class RerankConfig:
    sigma: float = 0.35
    epsilon: float = 0.25
    enabled_rules: frozenset[int] = ALL_RULES
    count_distinct_novel: bool = False  # N_diff counts occurrences by default
    case_sensitive_distance: bool = True

    def __post_init__(self):
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must be in (0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        extra = set(self.enabled_rules) - ALL_RULES
        if extra:
            raise ValueError(f"unknown rules: {sorted(extra)}")
        object.__setattr__(self, "enabled_rules", frozenset(self.enabled_rules))

    @classmethod
    def for_dataset(cls, name: str, **overrides) -> "RerankConfig":
        sigma, epsilon = DATASET_THRESHOLDS[name.lower()]
        return cls(sigma=sigma, epsilon=epsilon, **overrides)


@dataclass(frozen=True)
class RuleDiagnostics:
    rule1_violated: bool
    rule1_evidence: tuple[str, ...]
    rule2_violated: bool
    rule2_ratio: float
    rule3_violated: bool
    rule3_ratio: float
    rule3_vacuous: bool
    violations: frozenset[int]

    def to_dict(self) -> dict:
        return {
            "rule1_violated": self.rule1_violated,
            "rule1_evidence": list(self.rule1_evidence),
            "rule2_violated": self.rule2_violated,
            "rule2_ratio": self.rule2_ratio,
            "rule3_violated": self.rule3_violated,
            "rule3_ratio": self.rule3_ratio,
            "rule3_vacuous": self.rule3_vacuous,
            "violations": sorted(self.violations),
        }


@dataclass(frozen=True)
class RerankTarget:
    """The pieces of a CCS target the rules consume."""

    old_comment: str
    old_function_name: Optional[str] = None
    new_function_name: Optional[str] = None

    @classmethod
    def from_sample(cls, sample: CCSample) -> "RerankTarget":
        return cls(
            old_comment=sample.old_comment,
            old_function_name=extract_function_name(sample.old_code, sample.language),
            new_function_name=extract_function_name(sample.new_code, sample.language),
        )


def novel_subtoken_ratio(
    old_comment_subtokens: SubTokenSeq | Sequence[str],
    candidate_subtokens: SubTokenSeq | Sequence[str],
    count_distinct: bool = False,
) -> float:
    """Share of candidate sub-tokens whose lowercased value does not occur in
    the old comment. An empty candidate counts as all-novel (ratio 1)."""
    candidate = list(candidate_subtokens)
    if not candidate:
        return 1.0
    known = {s.lower() for s in old_comment_subtokens}
    novel = [s.lower() for s in candidate if s.lower() not in known]
    n_diff = len(set(novel)) if count_distinct else len(novel)
    return n_diff / len(candidate)


def comment_edit_ratio(
    old_comment_subtokens: SubTokenSeq | Sequence[str],
    candidate_subtokens: SubTokenSeq | Sequence[str],
    case_sensitive: bool = True,
) -> float:
    """Edit distance between the sub-token sequences, relative to the old
    comment's sub-token count. Undefined (0 by convention, and callers treat
    the rule as vacuous) when the old comment has no sub-tokens."""
    old = list(old_comment_subtokens)
    if not old:
        return 0.0
    distance = edit_distance(old, list(candidate_subtokens), case_sensitive=case_sensitive)
    return distance / len(old)


def check_rule1(target: RerankTarget, candidate: str) -> tuple[bool, tuple[str, ...]]:
    """Violation iff a sub-token removed by a function rename both occurs in
    the old comment and survives in the candidate (case-insensitive).
    Vacuously passes when no rename is detectable."""
    removed = removed_name_subtokens(target.old_function_name, target.new_function_name)
    if not removed:
        return False, ()
    comment_subtokens = set(subtokens_of(target.old_comment, "comment").lowered())
    candidate_subtokens = set(subtokens_of(candidate, "comment").lowered())
    evidence = tuple(sorted(removed & comment_subtokens & candidate_subtokens))
    return bool(evidence), evidence


def check_rule2(
    target: RerankTarget, candidate: str, sigma: float, count_distinct: bool = False
) -> tuple[bool, float]:
    ratio = novel_subtoken_ratio(
        subtokens_of(target.old_comment, "comment"),
        subtokens_of(candidate, "comment"),
        count_distinct=count_distinct,
    )
    return ratio >= sigma, ratio


def check_rule3(
    target: RerankTarget, candidate: str, epsilon: float, case_sensitive: bool = True
) -> tuple[bool, float, bool]:
    old = subtokens_of(target.old_comment, "comment")
    if len(old) == 0:
        logger.debug("rule 3 vacuous: old comment has no sub-tokens")
        return False, 0.0, True
    ratio = comment_edit_ratio(old, subtokens_of(candidate, "comment"), case_sensitive=case_sensitive)
    return ratio >= epsilon, ratio, False


def diagnose(target: RerankTarget, candidate: str, config: RerankConfig) -> RuleDiagnostics:
    rule1_violated, evidence = check_rule1(target, candidate)
    rule2_violated, rule2_ratio = check_rule2(target, candidate, config.sigma, config.count_distinct_novel)
    rule3_violated, rule3_ratio, rule3_vacuous = check_rule3(
        target, candidate, config.epsilon, config.case_sensitive_distance
    )
    violations = set()
    if 1 in config.enabled_rules and rule1_violated:
        violations.add(1)
    if 2 in config.enabled_rules and rule2_violated:
        violations.add(2)
    if 3 in config.enabled_rules and rule3_violated:
        violations.add(3)
    return RuleDiagnostics(
        rule1_violated=rule1_violated,
        rule1_evidence=evidence,
        rule2_violated=rule2_violated,
        rule2_ratio=rule2_ratio,
        rule3_violated=rule3_violated,
        rule3_ratio=rule3_ratio,
        rule3_vacuous=rule3_vacuous,
        violations=frozenset(violations),
    )


def multipass_order(
    count: int, violations: Sequence[frozenset[int] | set[int]], rules: Sequence[int]
) -> tuple[list[int], dict[int, list[int]]]:
    """Apply one stable partition per rule, weak to severe: non-violators
    first, violators moved to the end, both groups keeping their current
    relative order. Returns the final order and the order after each pass."""
    order = list(range(count))
    intermediates: dict[int, list[int]] = {}
    for rule in sorted(rules):
        keep = [i for i in order if rule not in violations[i]]
        move = [i for i in order if rule in violations[i]]
        order = keep + move
        intermediates[rule] = list(order)
    return order, intermediates


@dataclass(frozen=True)
class RerankResult:
    order: tuple[int, ...]  # permutation: positions into the input list
    ranked: tuple[str, ...]
    diagnostics: tuple[RuleDiagnostics, ...]  # aligned with the input list
    intermediate_orders: dict = field(hash=False, default_factory=dict)

    def diagnostics_in_final_order(self) -> list[RuleDiagnostics]:
        return [self.diagnostics[i] for i in self.order]


def rerank(target: RerankTarget, candidates: Sequence[str], config: RerankConfig = RerankConfig()) -> RerankResult:
    if not candidates:
        raise ValueError("candidates must be non-empty")
    diagnostics = [diagnose(target, c, config) for c in candidates]
    order, intermediates = multipass_order(
        len(candidates), [d.violations for d in diagnostics], sorted(config.enabled_rules)
    )
    return RerankResult(
        order=tuple(order),
        ranked=tuple(candidates[i] for i in order),
        diagnostics=tuple(diagnostics),
        intermediate_orders=intermediates,
    )
