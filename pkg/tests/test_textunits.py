"""Tokenizer, sub-token splitter, and edit distance."""

import random
import re

from hypothesis import given, settings
from hypothesis import strategies as st

from comsync.textunits import (
    SubTokenSeq,
    edit_distance,
    split_subtokens,
    split_token,
    strip_comment_markers,
    subtokens_of,
    tokenize,
)


def reference_comment_tokens(text):
    """Independent tokenizer for cross-checking: strip markers, then split."""
    cleaned = re.sub(r"/\*+|\*+/|'''|\"\"\"", " ", text)
    cleaned = re.sub(r"(?m)^(\s*)(//+|#+|\*(?=\s|$))", r"\1 ", cleaned)
    return re.findall(r"@\w+|\w+|[^\w\s]", cleaned)


def reference_split(token):
    """Independent character-class splitter for cross-checking."""
    out = []
    cur = ""
    chars = list(token)
    for i, ch in enumerate(chars):
        if not ch.isalnum():
            if cur:
                out.append(cur)
                cur = ""
            continue
        if cur:
            prev = cur[-1]
            nxt = chars[i + 1] if i + 1 < len(chars) else ""
            boundary = (
                prev.isdigit() != ch.isdigit()
                or (prev.islower() and ch.isupper())
                or (prev.isupper() and ch.isupper() and nxt.islower())
            )
            if boundary:
                out.append(cur)
                cur = ""
        cur += ch
    if cur:
        out.append(cur)
    return out


def test_tokenize_code_splits_punctuation():
    assert tokenize("return recipients;", "code").texts() == ["return", "recipients", ";"]


def test_tokenize_empty_input():
    assert tokenize("", "code").texts() == []
    assert tokenize("", "comment").texts() == []


def test_tokenize_comment_strips_markers():
    tokens = tokenize("/** Is the counter valid? */", "comment").texts()
    assert tokens == ["Is", "the", "counter", "valid", "?"]
    assert tokens == reference_comment_tokens("/** Is the counter valid? */")


def test_tokenize_comment_line_markers():
    assert tokenize("// update the cache", "comment").texts() == ["update", "the", "cache"]
    assert tokenize("# update the cache", "comment").texts() == ["update", "the", "cache"]
    javadoc = "/**\n * Returns the map.\n * @return the map\n */"
    tokens = tokenize(javadoc, "comment").texts()
    assert tokens == ["Returns", "the", "map", ".", "@return", "the", "map"]
    assert tokens == reference_comment_tokens(javadoc)


def test_tokenize_comment_keeps_markup_words():
    assert "@code" in tokenize("missing {@code null} case", "comment").texts()


def test_token_spans_reconstruct_source():
    code = "public int a() {\n    return x + 1;\n}"
    seq = tokenize(code, "code")
    assert seq.reconstruct() == code
    assert seq.source == code
    assert all(tok.text for tok in seq.tokens)
    comment = "/** Is the counter valid? */"
    cseq = tokenize(comment, "comment")
    assert cseq.reconstruct() == cseq.source == strip_comment_markers(comment)


def test_token_spans_track_lines_and_columns():
    seq = tokenize("a b\n  cd", "code")
    assert [(t.text, t.line, t.col) for t in seq.tokens] == [("a", 1, 0), ("b", 1, 2), ("cd", 2, 2)]


def test_split_camelcase():
    assert split_token("getConversationPanel") == ["get", "Conversation", "Panel"]


def test_split_snake_case():
    assert split_token("EMPTY_RECIPIENTS_ARRAY") == ["EMPTY", "RECIPIENTS", "ARRAY"]


def test_split_acronym_and_digit_boundaries():
    assert split_token("parseHTTPResponse2x") == ["parse", "HTTP", "Response", "2", "x"]
    assert split_token("parseHTTPResponse2x") == reference_split("parseHTTPResponse2x")


def test_split_drops_non_alphanumeric_tokens():
    seq = split_subtokens(["foo", ";", "bar_baz"])
    assert list(seq.subtokens) == ["foo", "bar", "baz"]
    assert list(seq.parents) == [0, 2, 2]


def test_split_matches_reference_on_random_identifiers():
    rng = random.Random(7)
    pieces = ["get", "HTTP", "Panel", "2", "x", "URL", "parse", "Timestamp", "42", "c"]
    for _ in range(300):
        token = "".join(rng.choice(pieces) for _ in range(rng.randint(1, 6)))
        assert split_token(token) == reference_split(token), token


def test_split_idempotent_on_atomic_subtokens():
    for token in ("get", "Conversation", "HTTP", "2026", "Panel"):
        parts = split_token(token)
        assert parts == [token]
        assert [p for part in parts for p in split_token(part)] == parts


def test_lowercased_concat_equals_identifier_without_separators():
    rng = random.Random(9)
    words = ["get", "set", "panel", "msg", "timestamp", "http", "url", "x2"]
    for _ in range(200):
        parts = [rng.choice(words) for _ in range(rng.randint(1, 5))]
        style = rng.choice(("camel", "snake"))
        if style == "camel":
            ident = parts[0] + "".join(p.capitalize() for p in parts[1:])
        else:
            ident = "_".join(parts)
        joined = "".join(split_token(ident)).lower()
        assert joined == ident.replace("_", "").lower()


def test_edit_distance_identity():
    seq = ["is", "the", "time", "counter", "valid", "for", "usage"]
    assert edit_distance(seq, list(seq)) == 0


def test_edit_distance_single_substitution():
    old = subtokens_of("Returns a hashtable containing the default validators .")
    new = subtokens_of("Returns a map containing the default validators .")
    assert len(old) == 7
    assert edit_distance(old, new) == 1


def test_edit_distance_pure_insertion():
    target = ["a", "b", "c", "d"]
    assert edit_distance([], target) == len(target)
    assert edit_distance(target, []) == len(target)


def test_edit_distance_case_flag():
    assert edit_distance(["Valid"], ["valid"]) == 1
    assert edit_distance(["Valid"], ["valid"], case_sensitive=False) == 0


@st.composite
def subtoken_lists(draw):
    alphabet = st.sampled_from(["a", "b", "c", "de", "fg"])
    return draw(st.lists(alphabet, max_size=8))


@settings(max_examples=200, deadline=None)
@given(subtoken_lists(), subtoken_lists(), subtoken_lists())
def test_edit_distance_is_a_metric(a, b, c):
    assert edit_distance(a, b) == edit_distance(b, a)
    assert (edit_distance(a, b) == 0) == (a == b)
    assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


def test_subtokens_of_chains_tokenize_and_split():
    seq = subtokens_of("/** getConversationPanel impl */", "comment")
    assert list(seq.subtokens) == ["get", "Conversation", "Panel", "impl"]
    assert isinstance(seq, SubTokenSeq)
    assert seq.lowered() == ["get", "conversation", "panel", "impl"]
