"""The synchronization pipeline: retrieve, render, generate, re-rank.

One engine instance owns the loaded index, the demonstration payloads, and
the providers; the CLI and the HTTP service both drive it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .config import RunConfig, derive_seed
from .embeddings import EmbeddingProvider, FallbackEmbedder, RemoteEmbedder
from .evaluate import TargetResult, TrialReport, score_corpus
from .gateway import (
    ChatProvider,
    CleaningConfig,
    MockChatProvider,
    OpenAIChatProvider,
    SamplingConfig,
    TokenLedger,
    generate,
    prompt_digest,
)
from .prompting import PromptTemplate, render_prompt
from .rerank import RerankConfig, RerankTarget, rerank
from .retrieval import DemonstrationIndex, retrieve
from .samples import CCSample


def make_embed_provider(config: RunConfig) -> EmbeddingProvider:
    settings = config.embedding
    if settings.kind == "fallback":
        return FallbackEmbedder(
            dimension=settings.dimension,
            hash_seed=settings.hash_seed,
            max_input_tokens=settings.max_input_tokens,
        )
    return RemoteEmbedder(
        endpoint=settings.endpoint,
        dimension=settings.dimension,
        timeout=settings.timeout,
        max_input_tokens=settings.max_input_tokens,
        batch_size=settings.batch_size,
    )


def make_llm_provider(config: RunConfig) -> ChatProvider:
    settings = config.llm
    if settings.kind == "mock":
        if settings.fixtures:
            return MockChatProvider.from_fixtures(settings.fixtures, seed=config.seed)
        return MockChatProvider(seed=config.seed)
    return OpenAIChatProvider(
        model=settings.model,
        base_url=settings.base_url,
        api_key_env=settings.api_key_env,
        timeout=settings.timeout,
        supports_n=settings.supports_n,
    )


@dataclass
class SyncEngine:
    index: DemonstrationIndex
    train_by_id: dict
    template: PromptTemplate
    embed_provider: EmbeddingProvider
    llm_provider: ChatProvider
    sampling: SamplingConfig
    rerank_config: RerankConfig
    strategy: str = "ehr"
    p: int = 4
    cleaning: CleaningConfig = CleaningConfig()

    @classmethod
    def from_config(
        cls,
        config: RunConfig,
        index: DemonstrationIndex,
        train_corpus: Sequence[CCSample],
        llm_provider: Optional[ChatProvider] = None,
        embed_provider: Optional[EmbeddingProvider] = None,
    ) -> "SyncEngine":
        template = (
            PromptTemplate.load(config.template_path, delimiter=config.delimiter)
            if config.template_path
            else PromptTemplate.default(delimiter=config.delimiter)
        )
        return cls(
            index=index,
            train_by_id={s.id: s for s in train_corpus},
            template=template,
            embed_provider=embed_provider or make_embed_provider(config),
            llm_provider=llm_provider or make_llm_provider(config),
            sampling=config.sampling,
            rerank_config=config.rerank_config(),
            strategy=config.retrieval.strategy,
            p=config.retrieval.p,
            cleaning=config.cleaning,
        )

    def run_target(self, target: CCSample, seed: int, ledger: Optional[TokenLedger] = None) -> dict:
        """Full pipeline for one target; returns a JSON-ready, self-contained
        record. Failures are recorded in the record, not raised."""
        record = {
            "target_id": target.id,
            "language": target.language,
            "old_code": target.old_code,
            "new_code": target.new_code,
            "old_comment": target.old_comment,
            "reference": target.new_comment,
            "demos": [],
            "candidates": [],
            "final_order": [],
            "ranked_candidates": [],
            "diagnostics": [],
            "usage": {"input_tokens": 0, "output_tokens": 0},
            "prompt_digest": None,
            "error": None,
        }
        try:
            demos = []
            if self.p > 0:
                result = retrieve(
                    self.index,
                    target,
                    strategy=self.strategy,
                    p=self.p,
                    seed=seed,
                    provider=self.embed_provider,
                )
                record["demos"] = [
                    {"id": d.sample_id, "pool": d.pool, "score": d.score, "rank_in_pool": d.rank_in_pool}
                    for d in result.demos
                ]
                demos = [self.train_by_id[d.sample_id] for d in result.demos]
            system, user = render_prompt(self.template, demos, target)
            record["prompt_digest"] = prompt_digest(system, user)
            candidate_set = generate(
                self.llm_provider, target.id, system, user, self.sampling, ledger, self.cleaning
            )
            record["candidates"] = [
                {"index": c.index, "raw": c.raw, "text": c.text} for c in candidate_set.candidates
            ]
            record["usage"] = {
                "input_tokens": candidate_set.input_tokens,
                "output_tokens": candidate_set.output_tokens,
            }
            reranked = rerank(RerankTarget.from_sample(target), candidate_set.texts(), self.rerank_config)
            record["final_order"] = list(reranked.order)
            record["ranked_candidates"] = list(reranked.ranked)
            record["diagnostics"] = [d.to_dict() for d in reranked.diagnostics]
        except Exception as exc:
            record["error"] = f"{type(exc).__name__}: {exc}"
        return record

    def run_trial(
        self,
        targets: Sequence[CCSample],
        trial_seed: int,
        parallelism: int = 1,
        ledger: Optional[TokenLedger] = None,
    ) -> list[dict]:
        """Records come back in target order regardless of worker scheduling."""
        seeds = [derive_seed(trial_seed, "target", t.id) for t in targets]
        if parallelism <= 1:
            return [self.run_target(t, s, ledger) for t, s in zip(targets, seeds)]
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(lambda pair: self.run_target(pair[0], pair[1], ledger), zip(targets, seeds)))


def score_records(
    records: Sequence[dict],
    targets_by_id: Optional[dict] = None,
    pre_rerank: bool = False,
    ledger: Optional[dict] = None,
) -> TrialReport:
    """Score a trial's records; errored or reference-less records cannot be
    scored and raise. ``pre_rerank`` scores the provider order instead of the
    re-ranked order."""
    results = []
    for record in records:
        if record.get("error"):
            raise ValueError(f"target {record['target_id']!r} failed: {record['error']}")
        sample = _record_sample(record, targets_by_id)
        candidates = (
            [c["text"] for c in record["candidates"]] if pre_rerank else list(record["ranked_candidates"])
        )
        results.append(TargetResult(sample=sample, ranked_candidates=tuple(candidates)))
    return score_corpus(results, ledger=ledger)


def _record_sample(record: dict, targets_by_id: Optional[dict]) -> CCSample:
    if targets_by_id and record["target_id"] in targets_by_id:
        return targets_by_id[record["target_id"]]
    return CCSample(
        id=record["target_id"],
        old_code=record["old_code"],
        new_code=record["new_code"],
        old_comment=record["old_comment"],
        language=record["language"],
        new_comment=record.get("reference"),
    )
