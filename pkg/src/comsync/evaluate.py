"""Accuracy, Recall@5, and ESS Ratio over a scored corpus, plus the corpus
analyses that motivated the re-ranking rules.

The corpus analyses reuse the reranker's ratio functions on reference
comments, so a histogram bin here and a rule decision there can never
drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .changes import extract_function_name, removed_name_subtokens
from .rerank import RerankTarget, check_rule1, comment_edit_ratio, novel_subtoken_ratio
from .samples import CCSample
from .textunits import edit_distance, subtokens_of, tokenize

RECALL_RANK = 5


class MissingReference(Exception):
    pass


def exact_match(candidate: str, reference: str) -> bool:
    """Token-level equality of the comment tokenizations, case-sensitive.

    Whitespace differences therefore never matter; wording differences
    always do.
    """
    return tokenize(candidate, "comment").texts() == tokenize(reference, "comment").texts()


@dataclass(frozen=True)
class TargetResult:
    sample: CCSample
    ranked_candidates: tuple[str, ...]


@dataclass(frozen=True)
class SampleRecord:
    target_id: str
    matched_at: Optional[int]  # 1-based rank of the first exact match, if any
    ed_diff: int  # ED(top-1, reference) - ED(old comment, reference)

    def to_dict(self) -> dict:
        return {"target_id": self.target_id, "matched_at": self.matched_at, "ed_diff": self.ed_diff}


@dataclass(frozen=True)
class TrialReport:
    accuracy: float
    recall_at_5: float
    ess_ratio: float
    n_targets: int
    records: tuple[SampleRecord, ...]
    ledger: Optional[dict] = None

    def metrics(self) -> dict:
        return {"accuracy": self.accuracy, "recall_at_5": self.recall_at_5, "ess_ratio": self.ess_ratio}

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "recall_at_5": self.recall_at_5,
            "ess_ratio": self.ess_ratio,
            "n_targets": self.n_targets,
            "records": [r.to_dict() for r in self.records],
            "ledger": self.ledger,
        }


METRIC_NAMES = ("accuracy", "recall_at_5", "ess_ratio")


@dataclass(frozen=True)
class EvalReport:
    """Aggregate over repeated trials: mean and population standard deviation
    per metric, with the per-trial values kept for recomputation."""

    trials: tuple[TrialReport, ...]
    mean: dict
    std: dict

    def to_dict(self) -> dict:
        return {
            "trials": [t.to_dict() for t in self.trials],
            "mean": self.mean,
            "std": self.std,
        }


def score_corpus(results: Sequence[TargetResult], ledger: Optional[dict] = None) -> TrialReport:
    """Score one trial.

    Accuracy counts exact matches at rank 1; Recall@5 within the top five;
    ESS counts targets whose top-1 candidate strictly reduces the sub-token
    edit distance to the reference, compared with the old comment.
    """
    if not results:
        raise ValueError("no results to score")
    records = []
    matched_1 = 0
    matched_5 = 0
    improved = 0
    for result in results:
        sample = result.sample
        if sample.new_comment is None:
            raise MissingReference(f"target {sample.id!r} has no reference comment")
        if not result.ranked_candidates:
            raise ValueError(f"target {sample.id!r} has no candidates")
        matched_at = None
        for rank, candidate in enumerate(result.ranked_candidates[:RECALL_RANK], start=1):
            if exact_match(candidate, sample.new_comment):
                matched_at = rank
                break
        reference_subtokens = subtokens_of(sample.new_comment, "comment")
        ed_top1 = edit_distance(subtokens_of(result.ranked_candidates[0], "comment"), reference_subtokens)
        ed_old = edit_distance(subtokens_of(sample.old_comment, "comment"), reference_subtokens)
        ed_diff = ed_top1 - ed_old
        if matched_at == 1:
            matched_1 += 1
        if matched_at is not None:
            matched_5 += 1
        if ed_diff < 0:
            improved += 1
        records.append(SampleRecord(target_id=sample.id, matched_at=matched_at, ed_diff=ed_diff))
    n = len(results)
    return TrialReport(
        accuracy=matched_1 / n,
        recall_at_5=matched_5 / n,
        ess_ratio=improved / n,
        n_targets=n,
        records=tuple(records),
        ledger=ledger,
    )


def aggregate_trials(reports: Sequence[TrialReport]) -> EvalReport:
    if not reports:
        raise ValueError("need at least one trial")
    mean = {}
    std = {}
    for name in METRIC_NAMES:
        values = [getattr(r, name) for r in reports]
        m = sum(values) / len(values)
        mean[name] = m
        std[name] = math.sqrt(sum((v - m) ** 2 for v in values) / len(values))
    return EvalReport(trials=tuple(reports), mean=mean, std=std)


# Corpus analysis ------------------------------------------------------------

HISTOGRAM_EDGES = [round(i * 0.1, 1) for i in range(11)]  # [0, 0.1, ..., 1.0]


@dataclass(frozen=True)
class HistogramBin:
    low: float
    high: float  # math.inf for the overflow bin
    count: int
    share: float

    def to_dict(self) -> dict:
        return {
            "low": self.low,
            "high": None if math.isinf(self.high) else self.high,
            "count": self.count,
            "share": self.share,
        }


def _histogram(values: Sequence[float]) -> list[HistogramBin]:
    """Bins of 0.1 over [0, 1] plus one overflow bin; 1.0 lands in the last
    regular bin so the mass over covered samples always sums to one."""
    counts = [0] * 11
    for value in values:
        if value > 1.0:
            counts[10] += 1
        elif value == 1.0:
            counts[9] += 1
        else:
            counts[int(value * 10)] += 1
    total = len(values)
    bins = []
    for i in range(10):
        bins.append(
            HistogramBin(
                low=HISTOGRAM_EDGES[i],
                high=HISTOGRAM_EDGES[i + 1],
                count=counts[i],
                share=counts[i] / total if total else 0.0,
            )
        )
    bins.append(HistogramBin(low=1.0, high=math.inf, count=counts[10], share=counts[10] / total if total else 0.0))
    return bins


@dataclass(frozen=True)
class CorpusAnalysis:
    n_samples: int
    propagation_rate: Optional[float]  # None when the rename subset is empty
    propagation_subset: int
    new_subtoken_histogram: tuple[HistogramBin, ...]
    new_subtoken_covered: int
    new_subtoken_share_below_04: float
    edit_ratio_histogram: tuple[HistogramBin, ...]
    edit_ratio_covered: int
    edit_ratio_share_below_06: float

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "propagation_rate": self.propagation_rate,
            "propagation_subset": self.propagation_subset,
            "new_subtoken_histogram": [b.to_dict() for b in self.new_subtoken_histogram],
            "new_subtoken_covered": self.new_subtoken_covered,
            "new_subtoken_share_below_04": self.new_subtoken_share_below_04,
            "edit_ratio_histogram": [b.to_dict() for b in self.edit_ratio_histogram],
            "edit_ratio_covered": self.edit_ratio_covered,
            "edit_ratio_share_below_06": self.edit_ratio_share_below_06,
        }


def analyze_corpus(corpus: Sequence[CCSample]) -> CorpusAnalysis:
    """The three sample analyses behind the rules, computed with the same
    ratio functions the reranker applies to candidates, using reference new
    comments in place of candidates."""
    ratio_values = []
    edit_values = []
    propagation_subset = 0
    propagated = 0
    for sample in corpus:
        if sample.new_comment is None:
            raise MissingReference(f"sample {sample.id!r} has no new comment")
        old_subtokens = subtokens_of(sample.old_comment, "comment")
        new_subtokens = subtokens_of(sample.new_comment, "comment")
        if len(new_subtokens) > 0:
            ratio_values.append(novel_subtoken_ratio(old_subtokens, new_subtokens))
        if len(old_subtokens) > 0:
            edit_values.append(comment_edit_ratio(old_subtokens, new_subtokens))

        old_name = extract_function_name(sample.old_code, sample.language)
        new_name = extract_function_name(sample.new_code, sample.language)
        removed = removed_name_subtokens(old_name, new_name)
        if removed and removed & {s.lower() for s in old_subtokens}:
            propagation_subset += 1
            target = RerankTarget(
                old_comment=sample.old_comment,
                old_function_name=old_name,
                new_function_name=new_name,
            )
            still_stale, _ = check_rule1(target, sample.new_comment)
            if not still_stale:
                propagated += 1

    return CorpusAnalysis(
        n_samples=len(corpus),
        propagation_rate=propagated / propagation_subset if propagation_subset else None,
        propagation_subset=propagation_subset,
        new_subtoken_histogram=tuple(_histogram(ratio_values)),
        new_subtoken_covered=len(ratio_values),
        new_subtoken_share_below_04=(
            sum(1 for v in ratio_values if v < 0.4) / len(ratio_values) if ratio_values else 0.0
        ),
        edit_ratio_histogram=tuple(_histogram(edit_values)),
        edit_ratio_covered=len(edit_values),
        edit_ratio_share_below_06=(
            sum(1 for v in edit_values if v < 0.6) / len(edit_values) if edit_values else 0.0
        ),
    )
