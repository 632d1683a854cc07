"""Dual demonstration index and the retrieval strategies over it.

Every sample carries two representations: the summed semantic vector and the
expert change-pattern vector. EHR concatenates the top half from each pool;
the other strategies rank one pool (or sample uniformly).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .embeddings import (
    DimensionMismatch,
    EmbeddingProvider,
    FallbackEmbedder,
    ProviderUnavailable,
    SemanticVector,
    cosine,
    embed_sample,
)
from .changes import diff_code
from .features import FeatureVector, feature_similarity, featurize
from .samples import CCSample, corpus_fingerprint, payload_digest

INDEX_FORMAT = "comsync-index"
INDEX_VERSION = 1

STRATEGIES = ("random", "expert", "semantic", "ehr")


class EmbeddingError(Exception):
    def __init__(self, sample_id: str, message: str):
        super().__init__(f"sample {sample_id!r}: {message}")
        self.sample_id = sample_id


class FeaturizeError(Exception):
    def __init__(self, sample_id: str, message: str):
        super().__init__(f"sample {sample_id!r}: {message}")
        self.sample_id = sample_id


class PoolTooSmall(Exception):
    pass


@dataclass(frozen=True)
class IndexEntry:
    sample_id: str
    vector: SemanticVector
    features: FeatureVector
    digest: str


@dataclass
class DemonstrationIndex:
    entries: list[IndexEntry]
    provider_kind: str
    dimension: int
    hash_seed: Optional[int]
    corpus_fingerprint: str

    def __post_init__(self):
        ids = [e.sample_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample ids in index")
        for entry in self.entries:
            if len(entry.vector) != self.dimension:
                raise DimensionMismatch(
                    f"entry {entry.sample_id!r} has dimension {len(entry.vector)}, index expects {self.dimension}"
                )

    def __len__(self) -> int:
        return len(self.entries)

    def header(self) -> dict:
        return {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "provider": {
                "kind": self.provider_kind,
                "dimension": self.dimension,
                "hash_seed": self.hash_seed,
            },
            "corpus_fingerprint": self.corpus_fingerprint,
            "entries": len(self.entries),
        }

    def save(self, path: str | Path) -> None:
        """One JSON header line, then one JSON line per entry, in id order.
        Serialization is canonical so identical corpora give identical bytes."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(self.header(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
            for entry in sorted(self.entries, key=lambda e: e.sample_id):
                record = {
                    "id": entry.sample_id,
                    "digest": entry.digest,
                    "semantic": entry.vector.tolist(),
                    "features": entry.features.to_dict(),
                }
                fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
                fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "DemonstrationIndex":
        with open(path, "r", encoding="utf-8") as fh:
            header_line = fh.readline()
            if not header_line.strip():
                raise ValueError(f"{path}: empty index file")
            header = json.loads(header_line)
            if header.get("format") != INDEX_FORMAT:
                raise ValueError(f"{path}: not a demonstration index")
            entries = []
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                entries.append(
                    IndexEntry(
                        sample_id=record["id"],
                        vector=SemanticVector.from_values(record["semantic"]),
                        features=FeatureVector.from_dict(record["features"]),
                        digest=record["digest"],
                    )
                )
        declared = header.get("entries")
        if declared is not None and declared != len(entries):
            raise ValueError(f"{path}: header declares {declared} entries, file holds {len(entries)}")
        provider = header["provider"]
        return cls(
            entries=entries,
            provider_kind=provider["kind"],
            dimension=provider["dimension"],
            hash_seed=provider.get("hash_seed"),
            corpus_fingerprint=header["corpus_fingerprint"],
        )

    def fallback_provider(self) -> FallbackEmbedder:
        if self.provider_kind != "fallback":
            raise ValueError("index was built with a remote provider; pass that provider to retrieve()")
        return FallbackEmbedder(dimension=self.dimension, hash_seed=self.hash_seed or 0)


@dataclass(frozen=True)
class RetrievedDemo:
    sample_id: str
    pool: str  # semantic | expert | random
    score: Optional[float]
    rank_in_pool: int


@dataclass(frozen=True)
class RetrievalResult:
    demos: tuple[RetrievedDemo, ...]

    def ids(self) -> list[str]:
        return [d.sample_id for d in self.demos]

    def __len__(self) -> int:
        return len(self.demos)


def build_index(corpus: Sequence[CCSample], provider: EmbeddingProvider) -> DemonstrationIndex:
    if not corpus:
        raise ValueError("corpus is empty")
    entries = []
    for sample in sorted(corpus, key=lambda s: s.id):
        try:
            vector = embed_sample(provider, sample.old_code, sample.old_comment, sample.new_code)
        except (ProviderUnavailable, DimensionMismatch) as exc:
            raise EmbeddingError(sample.id, str(exc)) from exc
        try:
            features = featurize(diff_code(sample.old_code, sample.new_code, sample.language), sample.old_comment)
        except Exception as exc:
            raise FeaturizeError(sample.id, str(exc)) from exc
        entries.append(
            IndexEntry(
                sample_id=sample.id,
                vector=vector,
                features=features,
                digest=payload_digest(sample),
            )
        )
    return DemonstrationIndex(
        entries=entries,
        provider_kind=provider.kind,
        dimension=provider.dimension,
        hash_seed=getattr(provider, "hash_seed", None),
        corpus_fingerprint=corpus_fingerprint(corpus),
    )


def _ranked(entries: list[IndexEntry], score) -> list[tuple[IndexEntry, float]]:
    scored = [(entry, score(entry)) for entry in entries]
    scored.sort(key=lambda pair: (-pair[1], pair[0].sample_id))
    return scored


def retrieve(
    index: DemonstrationIndex,
    target: CCSample,
    strategy: str = "ehr",
    p: int = 4,
    seed: int = 0,
    provider: Optional[EmbeddingProvider] = None,
) -> RetrievalResult:
    """Select ``p`` demonstrations for ``target``.

    The target itself is never returned: entries matching its id or its
    exact payload digest are excluded before ranking. Ties break by
    ascending sample id.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy: {strategy!r}")
    if p < 2:
        raise ValueError("p must be at least 2")
    if strategy == "ehr" and p % 2 != 0:
        raise ValueError("p must be even for ehr retrieval")
    if not index.entries:
        raise PoolTooSmall("index is empty")

    target_digest = payload_digest(target)
    eligible = [
        e for e in index.entries if e.sample_id != target.id and e.digest != target_digest
    ]
    if len(eligible) < p:
        raise PoolTooSmall(f"pool holds {len(eligible)} eligible demos, {p} requested")

    if strategy == "random":
        rng = random.Random(seed)
        ordered = sorted(eligible, key=lambda e: e.sample_id)
        chosen = rng.sample(ordered, p)
        demos = [
            RetrievedDemo(sample_id=e.sample_id, pool="random", score=None, rank_in_pool=i + 1)
            for i, e in enumerate(chosen)
        ]
        return RetrievalResult(demos=tuple(demos))

    if strategy in ("semantic", "ehr"):
        if provider is None:
            provider = index.fallback_provider()
        target_vector = embed_sample(provider, target.old_code, target.old_comment, target.new_code)
        semantic_ranking = _ranked(eligible, lambda e: cosine(target_vector, e.vector))
    if strategy in ("expert", "ehr"):
        target_features = featurize(
            diff_code(target.old_code, target.new_code, target.language), target.old_comment
        )
        expert_ranking = _ranked(eligible, lambda e: feature_similarity(target_features, e.features))

    if strategy == "semantic":
        demos = [
            RetrievedDemo(sample_id=e.sample_id, pool="semantic", score=s, rank_in_pool=i + 1)
            for i, (e, s) in enumerate(semantic_ranking[:p])
        ]
        return RetrievalResult(demos=tuple(demos))

    if strategy == "expert":
        demos = [
            RetrievedDemo(sample_id=e.sample_id, pool="expert", score=s, rank_in_pool=i + 1)
            for i, (e, s) in enumerate(expert_ranking[:p])
        ]
        return RetrievalResult(demos=tuple(demos))

    # EHR: top-(p/2) semantic, then top-(p/2) expert. A demo found by both
    # pools is kept once, in its semantic position; the shortfall is
    # backfilled from the next-ranked semantic entries.
    half = p // 2
    demos = [
        RetrievedDemo(sample_id=e.sample_id, pool="semantic", score=s, rank_in_pool=i + 1)
        for i, (e, s) in enumerate(semantic_ranking[:half])
    ]
    taken = {d.sample_id for d in demos}
    for i, (entry, score) in enumerate(expert_ranking[:half]):
        if entry.sample_id in taken:
            continue
        demos.append(RetrievedDemo(sample_id=entry.sample_id, pool="expert", score=score, rank_in_pool=i + 1))
        taken.add(entry.sample_id)
    for i, (entry, score) in enumerate(semantic_ranking[half:], start=half):
        if len(demos) == p:
            break
        if entry.sample_id in taken:
            continue
        demos.append(RetrievedDemo(sample_id=entry.sample_id, pool="semantic", score=score, rank_in_pool=i + 1))
        taken.add(entry.sample_id)
    return RetrievalResult(demos=tuple(demos))
