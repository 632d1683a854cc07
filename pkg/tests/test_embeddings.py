"""Fallback and remote embedding providers."""

import json

import httpx
import numpy as np
import pytest

from comsync.embeddings import (
    DimensionMismatch,
    FallbackEmbedder,
    ProviderUnavailable,
    RemoteEmbedder,
    SemanticVector,
    cosine,
    embed_sample,
    fnv1a64,
)


def reference_bag_vector(text, dimension, seed=0):
    """Independent hashed bag-of-sub-tokens computation for cross-checking."""
    import re

    def fnv(data: bytes) -> int:
        h = (0xCBF29CE484222325 ^ seed) & 0xFFFFFFFFFFFFFFFF
        for b in data:
            h ^= b
            h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
        return h

    vec = [0.0] * dimension
    for word in re.findall(r"\w+|[^\w\s]", text):
        for piece in re.findall(r"[0-9]+|[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+", word):
            vec[fnv(piece.encode()) % dimension] += 1.0
    norm = sum(x * x for x in vec) ** 0.5
    return [x / norm for x in vec] if norm else vec


def test_empty_text_maps_to_zero_vector():
    provider = FallbackEmbedder(dimension=16)
    vec = provider.embed_text("")
    assert vec.norm == 0.0
    assert not vec.values.any()
    assert provider.embed_text("   \n ").norm == 0.0


def test_fallback_is_deterministic():
    provider = FallbackEmbedder(dimension=64)
    a = provider.embed_text("getConversationPanel returns the panel")
    b = provider.embed_text("getConversationPanel returns the panel")
    assert np.array_equal(a.values, b.values)


def test_fallback_is_a_bag_model():
    provider = FallbackEmbedder(dimension=32)
    a = provider.embed_text("get Panel")
    b = provider.embed_text("Panel get")
    assert np.array_equal(a.values, b.values)


def test_fallback_matches_independent_bag_script():
    provider = FallbackEmbedder(dimension=48)
    text = "public int getAlphaBeta() { return alphaTotal; }"
    got = provider.embed_text(text).values
    expected = reference_bag_vector(text, 48)
    assert np.allclose(got, expected, atol=1e-12)


def test_fallback_truncates_by_subtoken_prefix():
    provider = FallbackEmbedder(dimension=32, max_input_tokens=3)
    long = provider.embed_text("alpha beta gamma delta epsilon")
    short = provider.embed_text("alpha beta gamma")
    assert np.array_equal(long.values, short.values)


def test_norm_cache_matches_values():
    provider = FallbackEmbedder(dimension=32)
    vec = provider.embed_text("alpha beta gamma")
    assert vec.norm == pytest.approx(float(np.linalg.norm(vec.values)), rel=1e-9)


def test_embed_sample_sums_inputs():
    class BasisProvider:
        kind = "stub"
        dimension = 4

        def __init__(self):
            self.calls = []

        def embed_many(self, texts):
            basis = {
                "old": [1.0, 0.0, 0.0, 0.0],
                "comment": [0.0, 1.0, 0.0, 0.0],
                "new": [0.0, 0.0, 1.0, 0.0],
            }
            return [SemanticVector.from_values(basis[t]) for t in texts]

        def embed_text(self, text):
            return self.embed_many([text])[0]

    total = embed_sample(BasisProvider(), "old", "comment", "new")
    assert total.values.tolist() == [1.0, 1.0, 1.0, 0.0]


def test_embed_sample_all_empty_is_zero():
    provider = FallbackEmbedder(dimension=8)
    assert embed_sample(provider, "", "", "").norm == 0.0


def test_embed_sample_matches_manual_sum():
    provider = FallbackEmbedder(dimension=24)
    parts = ("public int f() { return a; }", "returns a", "public int f() { return b; }")
    total = embed_sample(provider, *parts)
    manual = sum(provider.embed_text(p).values for p in parts)
    assert np.allclose(total.values, manual, atol=1e-12)


def test_cosine_scale_invariance_and_zero_convention():
    v = SemanticVector.from_values([1.0, 2.0, 3.0])
    scaled = SemanticVector.from_values([2.5, 5.0, 7.5])
    zero = SemanticVector.from_values([0.0, 0.0, 0.0])
    assert cosine(v, scaled) == pytest.approx(1.0, abs=1e-12)
    assert cosine(zero, zero) == 1.0
    assert cosine(zero, v) == 0.0


def test_fnv1a64_known_values():
    # Standard FNV-1a test vectors (seed 0 keeps the canonical offset basis).
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C


def mock_remote(handler):
    transport = httpx.MockTransport(handler)
    return RemoteEmbedder(
        endpoint="http://embed.test", dimension=3, client=httpx.Client(transport=transport), batch_size=2
    )


def test_remote_embeds_and_skips_empty_texts():
    seen_bodies = []

    def handler(request):
        body = json.loads(request.content)
        seen_bodies.append(body)
        vectors = [[1.0, 0.0, 0.0] for _ in body["texts"]]
        return httpx.Response(200, json={"vectors": vectors, "dimension": 3})

    provider = mock_remote(handler)
    vectors = provider.embed_many(["alpha", "", "beta", "gamma"])
    assert len(vectors) == 4
    assert vectors[1].norm == 0.0
    sent = [t for body in seen_bodies for t in body["texts"]]
    assert sent == ["alpha", "beta", "gamma"]  # chunked 2 + 1, empties never sent
    assert len(seen_bodies) == 2


def test_remote_dimension_mismatch():
    def handler(request):
        return httpx.Response(200, json={"vectors": [[1.0, 2.0]], "dimension": 2})

    with pytest.raises(DimensionMismatch):
        mock_remote(handler).embed_text("alpha")


def test_remote_unavailable_on_transport_error():
    def handler(request):
        raise httpx.ConnectError("refused")

    with pytest.raises(ProviderUnavailable):
        mock_remote(handler).embed_text("alpha")


def test_remote_unavailable_on_http_error():
    def handler(request):
        return httpx.Response(503, text="loading")

    with pytest.raises(ProviderUnavailable):
        mock_remote(handler).embed_text("alpha")
