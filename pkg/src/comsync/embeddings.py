"""Semantic vectors for samples: per-input embedding plus elementwise sum.

Two providers share one interface. The fallback provider is a hashed
bag-of-sub-tokens embedder (FNV-1a 64-bit, seed 0, L2-normalized) that makes
the whole pipeline runnable with zero ML dependencies; the remote provider
speaks the ``POST /embed`` JSON wire protocol of an encoder sidecar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import httpx
import numpy as np

from .textunits import subtokens_of, tokenize


class ProviderUnavailable(Exception):
    pass


class DimensionMismatch(Exception):
    pass


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes, seed: int = 0) -> int:
    """FNV-1a 64-bit; the seed is XORed into the offset basis."""
    h = (_FNV_OFFSET ^ seed) & _MASK64
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True, eq=False)
class SemanticVector:
    values: np.ndarray
    norm: float

    @classmethod
    def from_values(cls, values) -> "SemanticVector":
        arr = np.asarray(values, dtype=np.float64)
        return cls(values=arr, norm=float(np.linalg.norm(arr)))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def tolist(self) -> list[float]:
        return [float(x) for x in self.values]


def cosine(a: SemanticVector, b: SemanticVector) -> float:
    """Cosine similarity; two zero vectors count as identical, one zero
    vector against anything else scores 0."""
    if a.norm == 0.0 and b.norm == 0.0:
        return 1.0
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    value = float(np.dot(a.values, b.values) / (a.norm * b.norm))
    return max(-1.0, min(1.0, value))


class EmbeddingProvider(Protocol):
    kind: str
    dimension: int

    def embed_text(self, text: str) -> SemanticVector: ...

    def embed_many(self, texts: Sequence[str]) -> list[SemanticVector]: ...


class FallbackEmbedder:
    """Deterministic hashed bag-of-sub-tokens embedder."""

    kind = "fallback"

    def __init__(self, dimension: int = 256, hash_seed: int = 0, max_input_tokens: int = 512):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        if max_input_tokens <= 0:
            raise ValueError("max_input_tokens must be positive")
        self.dimension = dimension
        self.hash_seed = hash_seed
        self.max_input_tokens = max_input_tokens

    def embed_text(self, text: str) -> SemanticVector:
        vec = np.zeros(self.dimension, dtype=np.float64)
        if not text.strip():
            return SemanticVector.from_values(vec)
        subtokens = list(subtokens_of(text, "code"))[: self.max_input_tokens]
        for piece in subtokens:
            bucket = fnv1a64(piece.encode("utf-8"), self.hash_seed) % self.dimension
            vec[bucket] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return SemanticVector.from_values(vec)

    def embed_many(self, texts: Sequence[str]) -> list[SemanticVector]:
        return [self.embed_text(t) for t in texts]


class RemoteEmbedder:
    """Client for an encoder service exposing ``POST /embed``.

    Inputs are truncated to ``max_input_tokens`` sub-tokens (prefix kept) and
    sent in chunks of ``batch_size``. Empty inputs map to the zero vector
    without touching the service.
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        dimension: int,
        timeout: float = 30.0,
        max_input_tokens: int = 512,
        batch_size: int = 32,
        auth_token: Optional[str] = None,
        client: Optional[httpx.Client] = None,
    ):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.endpoint = endpoint.rstrip("/")
        self.dimension = dimension
        self.timeout = timeout
        self.max_input_tokens = max_input_tokens
        self.batch_size = batch_size
        self._headers = {"X-Auth-Token": auth_token} if auth_token else {}
        self._client = client or httpx.Client(timeout=timeout)

    def _truncate(self, text: str) -> str:
        seq = subtokens_of(text, "code")
        if len(seq) <= self.max_input_tokens:
            return text
        cutoff_token = seq.parents[self.max_input_tokens]
        tokens = tokenize(text, "code")
        return text[: tokens.tokens[cutoff_token].start]

    def embed_many(self, texts: Sequence[str]) -> list[SemanticVector]:
        zero = SemanticVector.from_values(np.zeros(self.dimension, dtype=np.float64))
        results: list[Optional[SemanticVector]] = [None] * len(texts)
        pending: list[tuple[int, str]] = []
        for i, text in enumerate(texts):
            if not text.strip():
                results[i] = zero
            else:
                pending.append((i, self._truncate(text)))
        for start in range(0, len(pending), self.batch_size):
            chunk = pending[start : start + self.batch_size]
            vectors = self._post([t for _, t in chunk])
            for (i, _), vec in zip(chunk, vectors):
                results[i] = vec
        return [r if r is not None else zero for r in results]

    def embed_text(self, text: str) -> SemanticVector:
        return self.embed_many([text])[0]

    def _post(self, texts: list[str]) -> list[SemanticVector]:
        try:
            response = self._client.post(
                f"{self.endpoint}/embed",
                json={"texts": texts},
                headers=self._headers,
            )
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"embed request failed: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnavailable(f"embed service returned HTTP {response.status_code}")
        payload = response.json()
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise DimensionMismatch("embed service returned a vector count different from the text count")
        out = []
        for vec in vectors:
            if len(vec) != self.dimension:
                raise DimensionMismatch(
                    f"embed service returned dimension {len(vec)}, expected {self.dimension}"
                )
            out.append(SemanticVector.from_values(vec))
        return out


def embed_sample(
    provider: EmbeddingProvider,
    old_code: str,
    old_comment: str,
    new_code: str,
    normalize_inputs: bool = False,
) -> SemanticVector:
    """Elementwise sum of the three per-input vectors.

    The sum is not re-normalized (cosine comparison normalizes later);
    ``normalize_inputs`` optionally unit-normalizes each input first.
    """
    vectors = provider.embed_many([old_code, old_comment, new_code])
    total = np.zeros(provider.dimension, dtype=np.float64)
    for vec in vectors:
        if normalize_inputs and vec.norm > 0.0:
            total += vec.values / vec.norm
        else:
            total += vec.values
    return SemanticVector.from_values(total)
