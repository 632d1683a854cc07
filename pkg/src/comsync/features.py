"""The 11-dimensional expert change-pattern vector and its similarity.

Eight raw counts describe change complexity and comment involvement; three
statement-type labels give context. For similarity the labels are one-hot
encoded, yielding a 38-dimensional numeric vector compared by cosine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .changes import STATEMENT_TYPES, CodeChange, StatementType
from .textunits import subtokens_of, tokenize

COUNT_FIELDS = ("nms", "nmt", "nml", "nmc", "nntrp", "nnsrp", "ntod", "nsod")
ENCODED_DIMENSION = len(COUNT_FIELDS) + 3 * len(STATEMENT_TYPES)

_TS_INDEX = {label: i for i, label in enumerate(STATEMENT_TYPES)}


@dataclass(frozen=True)
class FeatureVector:
    nms: int
    nmt: int
    nml: int
    nmc: int
    nntrp: int
    nnsrp: int
    ntod: int
    nsod: int
    ts1: StatementType = StatementType.NONE
    ts2: StatementType = StatementType.NONE
    ts3: StatementType = StatementType.NONE

    def __post_init__(self):
        for name in COUNT_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"feature {name} must be non-negative")
        if self.nmc > self.nml:
            raise ValueError("modified chunks cannot exceed modified lines")

    def encode(self) -> np.ndarray:
        """Numeric encoding: raw counts followed by one one-hot block per
        statement-type slot."""
        vec = np.zeros(ENCODED_DIMENSION, dtype=np.float64)
        for i, name in enumerate(COUNT_FIELDS):
            vec[i] = float(getattr(self, name))
        base = len(COUNT_FIELDS)
        for slot, label in enumerate((self.ts1, self.ts2, self.ts3)):
            vec[base + slot * len(STATEMENT_TYPES) + _TS_INDEX[label]] = 1.0
        return vec

    def to_dict(self) -> dict:
        record = {name: getattr(self, name) for name in COUNT_FIELDS}
        record["ts1"] = self.ts1.value
        record["ts2"] = self.ts2.value
        record["ts3"] = self.ts3.value
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "FeatureVector":
        return cls(
            **{name: int(record[name]) for name in COUNT_FIELDS},
            ts1=StatementType(record["ts1"]),
            ts2=StatementType(record["ts2"]),
            ts3=StatementType(record["ts3"]),
        )


def featurize(change: CodeChange, old_comment: str) -> FeatureVector:
    """Expert features for one sample, from its code change and old comment.

    The involvement counts (NTOD/NSOD) are distinct, case-insensitive values
    that appear in both the old comment and the old changed lines but in no
    new changed line.
    """
    comment_tokens = {t.lower() for t in tokenize(old_comment, "comment").texts()}
    comment_subtokens = {s.lower() for s in subtokens_of(old_comment, "comment")}

    old_code_tokens = {t.lower() for t in change.old_changed_tokens}
    new_code_tokens = {t.lower() for t in change.new_changed_tokens}
    old_code_subtokens = {s.lower() for s in change.old_changed_subtokens}
    new_code_subtokens = {s.lower() for s in change.new_changed_subtokens}

    ntod = len((comment_tokens & old_code_tokens) - new_code_tokens)
    nsod = len((comment_subtokens & old_code_subtokens) - new_code_subtokens)

    ts1, ts2, ts3 = change.changed_statement_types
    return FeatureVector(
        nms=change.modified_sub_tokens,
        nmt=change.modified_tokens,
        nml=change.modified_lines,
        nmc=change.modified_chunks,
        nntrp=len(change.token_replacements),
        nnsrp=len(change.subtoken_replacements),
        ntod=ntod,
        nsod=nsod,
        ts1=ts1,
        ts2=ts2,
        ts3=ts3,
    )


def feature_similarity(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine similarity over the encoded vectors.

    Two all-zero vectors are defined as identical (1.0); one all-zero vector
    against anything else scores 0.0.
    """
    va = a.encode()
    vb = b.encode()
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 and nb == 0.0:
        return 1.0
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = float(np.dot(va, vb) / (na * nb))
    return max(-1.0, min(1.0, value))
