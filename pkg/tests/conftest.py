"""Shared fixtures: the worked re-ranking example and synthetic corpora."""

import random

import pytest

from comsync.rerank import RerankTarget
from comsync.samples import CCSample

WORDS = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
    "iota", "kappa", "lambda", "mu", "nu", "xi", "omicron", "rho",
    "sigma", "tau", "upsilon", "phi",
]


def make_sample(i: int, rng: random.Random, prefix: str = "s", with_reference: bool = True) -> CCSample:
    a, b, c, d = rng.sample(WORDS, 4)
    old_name = f"get{a.capitalize()}{b.capitalize()}"
    renamed = rng.random() < 0.6
    new_name = f"get{c.capitalize()}{b.capitalize()}" if renamed else old_name
    shared = f"    int {b}Count = {rng.randint(0, 9)};"
    old_code = f"public int {old_name}() {{\n{shared}\n    return {a}Total;\n}}"
    if renamed:
        new_body = f"    return {c}Total;"
        new_comment = f"Returns the {c} {b} count for {d} ."
    else:
        new_body = f"    return {a}Total + 1;"
        new_comment = f"Returns the incremented {a} {b} count for {d} ."
    new_code = f"public int {new_name}() {{\n{shared}\n{new_body}\n}}"
    return CCSample(
        id=f"{prefix}{i:04d}",
        old_code=old_code,
        new_code=new_code,
        old_comment=f"Returns the {a} {b} count for {d} .",
        language="java",
        new_comment=new_comment if with_reference else None,
    )


def make_corpus(n: int, seed: int = 0, prefix: str = "s", with_reference: bool = True) -> list[CCSample]:
    rng = random.Random(seed)
    return [make_sample(i, rng, prefix, with_reference) for i in range(n)]


def make_python_sample(i: int, rng: random.Random, prefix: str = "py") -> CCSample:
    a, b, c = rng.sample(WORDS, 3)
    old_name = f"get_{a}_{b}"
    renamed = rng.random() < 0.6
    new_name = f"get_{c}_{b}" if renamed else old_name
    old_code = f"def {old_name}(self):\n    total = self.{a}_count\n    return total"
    body = f"    total = self.{c}_count" if renamed else f"    total = self.{a}_count + 1"
    new_code = f"def {new_name}(self):\n{body}\n    return total"
    old_comment = f"Return the {a} {b} total ."
    new_comment = f"Return the {c} {b} total ." if renamed else f"Return the bumped {a} {b} total ."
    return CCSample(
        id=f"{prefix}{i:04d}",
        old_code=old_code,
        new_code=new_code,
        old_comment=old_comment,
        language="python",
        new_comment=new_comment,
    )


def make_python_corpus(n: int, seed: int = 0, prefix: str = "py") -> list[CCSample]:
    rng = random.Random(seed)
    return [make_python_sample(i, rng, prefix) for i in range(n)]


@pytest.fixture
def train_corpus():
    return make_corpus(30, seed=11, prefix="train-")


@pytest.fixture
def test_corpus():
    return make_corpus(8, seed=23, prefix="test-")


# The worked multi-turn re-ranking example: a rename drops "valid" for
# "active", the old comment mentions "valid", and the four candidates hit
# the published rule ratios (1/5, 1/7, 0/7, 5/9 novel; 3/7, 1/7, 0/7, 5/7
# edit) and the published intermediate orders.
CASE_STUDY_OLD_CODE = "public boolean isValid() {\n    return this.counter > 0;\n}"
CASE_STUDY_NEW_CODE = "public boolean isActive() {\n    return this.counter > 0;\n}"
CASE_STUDY_OLD_COMMENT = "Is the time counter valid for usage ?"
CASE_STUDY_REFERENCE = "Is the time counter active for usage ?"
CASE_STUDY_CANDIDATES = [
    "Is the time counter active ?",
    "Is the time counter active for usage ?",
    "Is the time counter valid for usage ?",
    "Is the time counter currently active and ready now ?",
]
CASE_STUDY_RULE2_RATIOS = [1 / 5, 1 / 7, 0.0, 5 / 9]
CASE_STUDY_RULE3_RATIOS = [3 / 7, 1 / 7, 0.0, 5 / 7]


@pytest.fixture
def case_study_sample():
    return CCSample(
        id="case-study-3",
        old_code=CASE_STUDY_OLD_CODE,
        new_code=CASE_STUDY_NEW_CODE,
        old_comment=CASE_STUDY_OLD_COMMENT,
        language="java",
        new_comment=CASE_STUDY_REFERENCE,
    )


@pytest.fixture
def case_study_target(case_study_sample):
    return RerankTarget.from_sample(case_study_sample)


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        print(f"\n[ACCEPTANCE] {name}: {outcome}")
    elif report.when == "setup" and report.skipped:
        print(f"\n[ACCEPTANCE] {name}: SKIP")
