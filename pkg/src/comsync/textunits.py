"""Tokenization of code and comments, sub-token splitting, and edit distance.

Tokens are whitespace/punctuation-delimited units with source spans;
sub-tokens are the camelCase / snake_case / digit-boundary fragments that
the retrieval features and the re-ranking rules are defined over.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

# Code: identifier-ish runs stay together, every punctuation char is its own token.
_CODE_TOKEN = re.compile(r"\w+|[^\w\s]", re.UNICODE)
# Comments additionally keep markup words like "@code" or "@return" as one token.
_COMMENT_TOKEN = re.compile(r"@\w+|\w+|[^\w\s]", re.UNICODE)

# Sub-token boundaries: digit runs, acronym runs (uppercase run not followed by
# lowercase), Capitalized words, lowercase runs, and non-ASCII letter runs.
_SUBTOKEN = re.compile(r"[0-9]+|[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[^\W\dA-Za-z_]+", re.UNICODE)

_BLOCK_OPEN = re.compile(r"/\*+")
_BLOCK_CLOSE = re.compile(r"\*+/")
_LINE_MARKER = re.compile(r"^(\s*)(//+|#+|\*(?=\s|$))")
_DOC_QUOTES = re.compile(r'("""|\'\'\')')


@dataclass(frozen=True)
class Token:
    text: str
    line: int  # 1-based line number in the tokenized source
    col: int  # 0-based column within that line
    start: int  # absolute character offset in the tokenized source
    end: int


@dataclass(frozen=True)
class TokenSeq:
    """Token sequence over ``source``; splicing tokens back with the
    inter-token separators reproduces ``source`` exactly."""

    source: str
    tokens: tuple[Token, ...]

    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    def separators(self) -> list[str]:
        """The n+1 gap strings around the n tokens."""
        seps = []
        pos = 0
        for tok in self.tokens:
            seps.append(self.source[pos:tok.start])
            pos = tok.end
        seps.append(self.source[pos:])
        return seps

    def reconstruct(self) -> str:
        parts = []
        seps = self.separators()
        for sep, tok in zip(seps, self.tokens):
            parts.append(sep)
            parts.append(tok.text)
        parts.append(seps[-1])
        return "".join(parts)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class SubTokenSeq:
    """Sub-tokens plus the index of the originating token for each."""

    subtokens: tuple[str, ...]
    parents: tuple[int, ...]

    def lowered(self) -> list[str]:
        return [s.lower() for s in self.subtokens]

    def __len__(self) -> int:
        return len(self.subtokens)

    def __iter__(self):
        return iter(self.subtokens)


def strip_comment_markers(text: str) -> str:
    """Blank out comment markers, preserving the line/column layout.

    Markers (``//``, ``/* */``, ``#``, javadoc ``*`` continuations and
    docstring quotes) are replaced with spaces of the same width, so token
    spans keep pointing at the original comment text.
    """

    def blank(match: re.Match) -> str:
        return " " * (match.end() - match.start())

    lines = []
    for raw in text.split("\n"):
        line = _BLOCK_OPEN.sub(blank, raw)
        line = _BLOCK_CLOSE.sub(blank, line)
        line = _DOC_QUOTES.sub(blank, line)
        m = _LINE_MARKER.match(line)
        if m:
            line = line[: m.start(2)] + " " * (m.end(2) - m.start(2)) + line[m.end(2):]
        lines.append(line)
    return "\n".join(lines)


def tokenize(text: str, kind: str = "code") -> TokenSeq:
    """Split ``text`` into tokens.

    ``kind="comment"`` strips comment markers first (the spans then refer to
    the marker-blanked text) and keeps ``@word`` markup as single tokens.
    """
    if kind not in ("code", "comment"):
        raise ValueError(f"unknown kind: {kind!r}")
    source = strip_comment_markers(text) if kind == "comment" else text
    pattern = _COMMENT_TOKEN if kind == "comment" else _CODE_TOKEN

    line_starts = [0]
    for i, ch in enumerate(source):
        if ch == "\n":
            line_starts.append(i + 1)

    tokens = []
    line_no = 0
    for m in pattern.finditer(source):
        start = m.start()
        while line_no + 1 < len(line_starts) and line_starts[line_no + 1] <= start:
            line_no += 1
        tokens.append(
            Token(
                text=m.group(),
                line=line_no + 1,
                col=start - line_starts[line_no],
                start=start,
                end=m.end(),
            )
        )
    return TokenSeq(source=source, tokens=tuple(tokens))


def split_token(text: str) -> list[str]:
    """Sub-tokens of a single token: split at underscores, lower->Upper,
    letter<->digit, and acronym boundaries; punctuation yields nothing."""
    return _SUBTOKEN.findall(text)


def split_subtokens(tok: TokenSeq | Sequence[str]) -> SubTokenSeq:
    if isinstance(tok, TokenSeq):
        texts = tok.texts()
    else:
        texts = list(tok)
    subtokens: list[str] = []
    parents: list[int] = []
    for idx, text in enumerate(texts):
        for piece in split_token(text):
            subtokens.append(piece)
            parents.append(idx)
    return SubTokenSeq(subtokens=tuple(subtokens), parents=tuple(parents))


def subtokens_of(text: str, kind: str = "comment") -> SubTokenSeq:
    return split_subtokens(tokenize(text, kind))


def _as_strings(seq: SubTokenSeq | Sequence[str]) -> list[str]:
    if isinstance(seq, SubTokenSeq):
        return list(seq.subtokens)
    return list(seq)


def edit_distance(a: SubTokenSeq | Sequence[str], b: SubTokenSeq | Sequence[str], case_sensitive: bool = True) -> int:
    """Levenshtein distance with unit-cost insert/delete/substitute over
    whole sub-tokens."""
    xs = _as_strings(a)
    ys = _as_strings(b)
    if not case_sensitive:
        xs = [s.lower() for s in xs]
        ys = [s.lower() for s in ys]
    if not xs:
        return len(ys)
    if not ys:
        return len(xs)
    prev = list(range(len(ys) + 1))
    for i, x in enumerate(xs, start=1):
        cur = [i] + [0] * len(ys)
        for j, y in enumerate(ys, start=1):
            cost = 0 if x == y else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]
