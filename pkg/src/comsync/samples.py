"""Code-comment co-change records and their JSONL serialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

LANGUAGES = ("java", "python")

REQUIRED_FIELDS = ("id", "old_code", "new_code", "old_comment", "language")
OPTIONAL_FIELDS = ("new_comment",)


@dataclass(frozen=True)
class CCSample:
    """One code-comment co-change record.

    ``new_comment`` is the reference comment; it is optional because CCS
    targets hide the reference at inference time.
    """

    id: str
    old_code: str
    new_code: str
    old_comment: str
    language: str = "java"
    new_comment: Optional[str] = None

    def __post_init__(self):
        if self.language not in LANGUAGES:
            raise ValueError(f"unsupported language: {self.language!r}")


def normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def sample_to_dict(sample: CCSample) -> dict:
    record = {
        "id": sample.id,
        "old_code": sample.old_code,
        "new_code": sample.new_code,
        "old_comment": sample.old_comment,
        "language": sample.language,
    }
    if sample.new_comment is not None:
        record["new_comment"] = sample.new_comment
    return record


def canonical_sample_json(sample: CCSample) -> str:
    return json.dumps(sample_to_dict(sample), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def payload_digest(sample: CCSample) -> str:
    """Digest over the inference-time payload (old code, new code, old comment).

    The reference comment is deliberately excluded so that a demonstration
    that exactly duplicates a target is recognized even when the target's
    reference is hidden.
    """
    blob = "\x1e".join((sample.old_code, sample.new_code, sample.old_comment))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def corpus_fingerprint(samples: Iterable[CCSample]) -> str:
    h = hashlib.sha256()
    for sample in sorted(samples, key=lambda s: s.id):
        h.update(canonical_sample_json(sample).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def parse_record(record: dict) -> CCSample:
    """Build a CCSample from a decoded JSONL record, normalizing line endings."""
    if not isinstance(record, dict):
        raise ValueError("record is not a JSON object")
    missing = [f for f in REQUIRED_FIELDS if f not in record]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    unknown = [k for k in record if k not in REQUIRED_FIELDS + OPTIONAL_FIELDS]
    if unknown:
        raise ValueError(f"unknown fields: {', '.join(sorted(unknown))}")
    for name in ("id", "old_code", "new_code", "old_comment", "language"):
        if not isinstance(record[name], str):
            raise ValueError(f"field {name!r} must be a string")
    if not record["id"]:
        raise ValueError("field 'id' must be non-empty")
    new_comment = record.get("new_comment")
    if new_comment is not None and not isinstance(new_comment, str):
        raise ValueError("field 'new_comment' must be a string when present")
    if record["language"] not in LANGUAGES:
        raise ValueError(f"field 'language' must be one of {LANGUAGES}")
    return CCSample(
        id=record["id"],
        old_code=normalize_newlines(record["old_code"]),
        new_code=normalize_newlines(record["new_code"]),
        old_comment=normalize_newlines(record["old_comment"]),
        language=record["language"],
        new_comment=normalize_newlines(new_comment) if new_comment is not None else None,
    )


@dataclass
class ValidationReport:
    path: str
    n_valid: int = 0
    errors: list = field(default_factory=list)  # (line number, message)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "valid_records": self.n_valid,
            "errors": [{"line": line, "message": msg} for line, msg in self.errors],
        }


def validate_jsonl(path: str | Path) -> tuple[list[CCSample], ValidationReport]:
    """Parse a JSONL corpus leniently, collecting per-line schema errors."""
    report = ValidationReport(path=str(path))
    samples: list[CCSample] = []
    seen_ids: dict[str, int] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(normalize_newlines(text).split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            report.errors.append((lineno, f"invalid JSON: {exc.msg}"))
            continue
        try:
            sample = parse_record(record)
        except ValueError as exc:
            report.errors.append((lineno, str(exc)))
            continue
        if sample.id in seen_ids:
            report.errors.append((lineno, f"duplicate id {sample.id!r} (first seen on line {seen_ids[sample.id]})"))
            continue
        seen_ids[sample.id] = lineno
        samples.append(sample)
    report.n_valid = len(samples)
    return samples, report


def load_jsonl(path: str | Path) -> list[CCSample]:
    """Parse a JSONL corpus strictly; any schema error raises."""
    samples, report = validate_jsonl(path)
    if report.errors:
        line, msg = report.errors[0]
        raise ValueError(f"{path}:{line}: {msg}")
    return samples


def dump_jsonl(samples: Iterable[CCSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            fh.write(canonical_sample_json(sample))
            fh.write("\n")
