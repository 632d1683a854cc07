"""Structure of a code change: modified lines/chunks, token and sub-token
diffs, replacement pairs, function-name change, and statement typing.

Statement typing is a deliberate line-shape heuristic, not a parse; the
downstream retrieval features only need a coarse, stable label.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .textunits import split_subtokens, split_token, tokenize


class TokenizeError(Exception):
    pass


class StatementType(str, Enum):
    DECLARATION = "DECLARATION"
    ASSIGNMENT = "ASSIGNMENT"
    RETURN = "RETURN"
    CONDITIONAL = "CONDITIONAL"
    LOOP = "LOOP"
    CALL = "CALL"
    THROW = "THROW"
    SIGNATURE = "SIGNATURE"
    OTHER = "OTHER"
    NONE = "NONE"


STATEMENT_TYPES = tuple(StatementType)

_WORD = re.compile(r"[A-Za-z_$][\w$]*")
_DECLARATION = re.compile(r"^[\w$.<>\[\],\s]+\s[\w$]+\s*;?\s*$")
_JAVA_MODIFIERS = {
    "public", "private", "protected", "static", "final", "abstract",
    "synchronized", "native", "strictfp", "default", "transient", "volatile",
}
_CONTROL_KEYWORDS = {
    "if", "for", "while", "switch", "catch", "return", "new", "else",
    "synchronized", "assert", "throw", "do", "try",
}


@dataclass(frozen=True)
class CodeChange:
    modified_sub_tokens: int
    modified_tokens: int
    modified_lines: int
    modified_chunks: int
    token_replacements: frozenset[tuple[str, str]]
    subtoken_replacements: frozenset[tuple[str, str]]
    changed_statement_types: tuple[StatementType, StatementType, StatementType]
    function_name_change: Optional[tuple[str, str]]
    # Token material of the changed lines, kept for involvement features.
    old_changed_tokens: tuple[str, ...]
    new_changed_tokens: tuple[str, ...]
    old_changed_subtokens: tuple[str, ...]
    new_changed_subtokens: tuple[str, ...]


def _has_assignment(line: str) -> bool:
    for i, ch in enumerate(line):
        if ch != "=":
            continue
        nxt = line[i + 1] if i + 1 < len(line) else ""
        prev = line[i - 1] if i > 0 else ""
        if nxt == "=" or prev in "=!<>":
            continue
        return True
    return False


def classify_statement(line: str, lang: str = "java") -> StatementType:
    """First-match keyword/shape heuristic for the statement a line holds."""
    stripped = line.strip()
    if not stripped:
        return StatementType.OTHER
    words = _WORD.findall(stripped)
    first = words[0] if words else ""
    if first == "return":
        return StatementType.RETURN
    if first in ("if", "else", "switch", "elif"):
        return StatementType.CONDITIONAL
    if first in ("for", "while"):
        return StatementType.LOOP
    if first in ("throw", "raise"):
        return StatementType.THROW
    if _has_assignment(stripped):
        return StatementType.ASSIGNMENT
    if first == "def" or ("(" in stripped and (first in _JAVA_MODIFIERS or stripped.endswith("{"))):
        return StatementType.SIGNATURE
    if "(" not in stripped and len(words) >= 2 and _DECLARATION.match(stripped):
        return StatementType.DECLARATION
    body = stripped.rstrip(";").rstrip()
    if body.endswith(")") and "(" in body:
        return StatementType.CALL
    return StatementType.OTHER


def extract_function_name(code: str, lang: str = "java") -> Optional[str]:
    """The declared function name, if a signature can be found.

    Java: identifier immediately before the first '(' on the first
    non-annotation, non-comment line that contains one. Python: identifier
    after the first ``def``.
    """
    if lang == "python":
        m = re.search(r"\bdef\s+([A-Za-z_]\w*)", code)
        return m.group(1) if m else None
    for raw in code.split("\n"):
        stripped = raw.strip()
        if not stripped or stripped.startswith(("@", "//", "/*", "*")):
            continue
        paren = stripped.find("(")
        if paren < 0:
            continue
        m = re.search(r"([A-Za-z_$][\w$]*)\s*$", stripped[:paren])
        if not m or m.group(1) in _CONTROL_KEYWORDS:
            return None
        return m.group(1)
    return None


def _lcs_ops(a: Sequence[str], b: Sequence[str]) -> list[tuple[str, int, int]]:
    """Edit script between two sequences from a longest-common-subsequence
    alignment; ops are ("equal"|"delete"|"insert", old index, new index)."""
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        row = dp[i]
        prev = dp[i - 1]
        ai = a[i - 1]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = prev[j] if prev[j] >= row[j - 1] else row[j - 1]
    ops: list[tuple[str, int, int]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and dp[i][j] == dp[i - 1][j - 1] + 1:
            ops.append(("equal", i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and dp[i][j] == dp[i - 1][j]:
            ops.append(("delete", i - 1, -1))
            i -= 1
        else:
            ops.append(("insert", -1, j - 1))
            j -= 1
    ops.reverse()
    return ops


def _chunks(ops: Sequence[tuple[str, int, int]]) -> list[tuple[list[int], list[int]]]:
    """Maximal runs of changed lines; each chunk is (old line idxs, new line idxs)."""
    chunks = []
    old_idx: list[int] = []
    new_idx: list[int] = []
    for op, i, j in ops:
        if op == "equal":
            if old_idx or new_idx:
                chunks.append((old_idx, new_idx))
                old_idx, new_idx = [], []
        elif op == "delete":
            old_idx.append(i)
        else:
            new_idx.append(j)
    if old_idx or new_idx:
        chunks.append((old_idx, new_idx))
    return chunks


def _normalized_lines(code: str) -> list[str]:
    """Lines with trailing whitespace stripped and trailing blank lines
    dropped, so whitespace-only differences never register as changes."""
    lines = [line.rstrip() for line in code.split("\n")]
    while lines and not lines[-1]:
        lines.pop()
    return lines


def _line_tokens(line: str) -> list[str]:
    return tokenize(line, "code").texts()


def _line_subtokens(line: str) -> list[str]:
    return list(split_subtokens(tokenize(line, "code")).subtokens)


def _replacement_pairs(old_units: Sequence[str], new_units: Sequence[str]) -> set[tuple[str, str]]:
    """Pairs from positionally matching the delete run against the insert run
    of each replaced region in the unit-level alignment."""
    pairs: set[tuple[str, str]] = set()
    deletes: list[str] = []
    inserts: list[str] = []

    def flush():
        for old, new in zip(deletes, inserts):
            if old != new:
                pairs.add((old, new))
        deletes.clear()
        inserts.clear()

    for op, i, j in _lcs_ops(old_units, new_units):
        if op == "equal":
            flush()
        elif op == "delete":
            deletes.append(old_units[i])
        else:
            inserts.append(new_units[j])
    flush()
    return pairs


def diff_code(old: str, new: str, lang: str = "java") -> CodeChange:
    """Line-level LCS diff between two code snippets, with the token and
    sub-token modification counts the expert features are built from.

    Lines are compared with trailing whitespace stripped, so whitespace-only
    edits do not register as changes.
    """
    if not isinstance(old, str) or not isinstance(new, str):
        raise TokenizeError("diff_code expects source strings")
    old_lines = _normalized_lines(old)
    new_lines = _normalized_lines(new)

    ops = _lcs_ops(old_lines, new_lines)
    chunks = _chunks(ops)

    modified_lines = 0
    token_pairs: set[tuple[str, str]] = set()
    subtoken_pairs: set[tuple[str, str]] = set()
    old_changed: list[int] = []
    new_changed: list[int] = []
    for chunk_old, chunk_new in chunks:
        modified_lines += max(len(chunk_old), len(chunk_new))
        old_changed.extend(chunk_old)
        new_changed.extend(chunk_new)
        # Positionally aligned line pairs within the chunk; surplus lines on
        # either side contribute to counts but never to replacement pairs.
        for oi, ni in zip(chunk_old, chunk_new):
            token_pairs |= _replacement_pairs(_line_tokens(old_lines[oi]), _line_tokens(new_lines[ni]))
            subtoken_pairs |= _replacement_pairs(_line_subtokens(old_lines[oi]), _line_subtokens(new_lines[ni]))

    old_tokens: list[str] = []
    old_token_lines: list[int] = []
    for oi in old_changed:
        for text in _line_tokens(old_lines[oi]):
            old_tokens.append(text)
            old_token_lines.append(oi)
    new_tokens = [t for ni in new_changed for t in _line_tokens(new_lines[ni])]
    old_subtokens = [s for oi in old_changed for s in _line_subtokens(old_lines[oi])]
    new_subtokens = [s for ni in new_changed for s in _line_subtokens(new_lines[ni])]

    old_counter = Counter(old_tokens)
    new_counter = Counter(new_tokens)
    modified_tokens = sum(((old_counter - new_counter) + (new_counter - old_counter)).values())
    old_sub_counter = Counter(old_subtokens)
    new_sub_counter = Counter(new_subtokens)
    modified_subtokens = sum(((old_sub_counter - new_sub_counter) + (new_sub_counter - old_sub_counter)).values())

    # First three changed tokens, in (line, column) order of the old version:
    # a token occurrence counts as changed while its value still has removals
    # left over after cancelling against the new changed lines.
    removal_budget = old_counter - new_counter
    changed_types: list[StatementType] = []
    for text, oi in zip(old_tokens, old_token_lines):
        if len(changed_types) == 3:
            break
        if removal_budget[text] > 0:
            removal_budget[text] -= 1
            changed_types.append(classify_statement(old_lines[oi], lang))
    while len(changed_types) < 3:
        changed_types.append(StatementType.NONE)

    old_name = extract_function_name(old, lang)
    new_name = extract_function_name(new, lang)
    name_change = (old_name, new_name) if old_name and new_name and old_name != new_name else None

    return CodeChange(
        modified_sub_tokens=modified_subtokens,
        modified_tokens=modified_tokens,
        modified_lines=modified_lines,
        modified_chunks=len(chunks),
        token_replacements=frozenset(token_pairs),
        subtoken_replacements=frozenset(subtoken_pairs),
        changed_statement_types=(changed_types[0], changed_types[1], changed_types[2]),
        function_name_change=name_change,
        old_changed_tokens=tuple(old_tokens),
        new_changed_tokens=tuple(new_tokens),
        old_changed_subtokens=tuple(old_subtokens),
        new_changed_subtokens=tuple(new_subtokens),
    )


def removed_name_subtokens(old_name: Optional[str], new_name: Optional[str]) -> frozenset[str]:
    """Lowercased sub-tokens dropped from a function name by a rename; empty
    when either side has no extractable name."""
    if not old_name or not new_name or old_name == new_name:
        return frozenset()
    old_parts = {s.lower() for s in split_token(old_name)}
    new_parts = {s.lower() for s in split_token(new_name)}
    return frozenset(old_parts - new_parts)
