"""HTTP service wrapping the pipeline for long-running, multi-client use.

The service holds a loaded demonstration index in memory and exposes
per-target operations; corpus-scale work (ingest, indexing, sweeps, full
evaluations) stays in the CLI. ``POST /embed`` serves the same wire format
the remote embedding client consumes, backed by the fallback embedder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .config import RunConfig, derive_seed
from .embeddings import EmbeddingProvider
from .evaluate import analyze_corpus
from .gateway import ChatProvider, TokenLedger
from .pipeline import SyncEngine, make_embed_provider, make_llm_provider
from .rerank import RerankConfig, RerankTarget, rerank
from .retrieval import DemonstrationIndex, PoolTooSmall, retrieve
from .samples import CCSample, load_jsonl


class SampleModel(BaseModel):
    id: str
    old_code: str
    new_code: str
    old_comment: str
    language: str = "java"
    new_comment: Optional[str] = None

    def to_sample(self) -> CCSample:
        return CCSample(
            id=self.id,
            old_code=self.old_code,
            new_code=self.new_code,
            old_comment=self.old_comment,
            language=self.language,
            new_comment=self.new_comment,
        )


class HealthResponse(BaseModel):
    status: str
    version: str
    index_entries: int
    embedding_kind: str
    dimension: int


class EmbedRequest(BaseModel):
    texts: list[str]


class EmbedResponse(BaseModel):
    vectors: list[list[float]]
    dimension: int


class DemoModel(BaseModel):
    id: str
    pool: str
    score: Optional[float]
    rank_in_pool: int


class RetrieveRequest(BaseModel):
    target: SampleModel
    strategy: str = "ehr"
    p: int = 4
    seed: int = 0


class RetrieveResponse(BaseModel):
    target_id: str
    demos: list[DemoModel]


class RerankRequest(BaseModel):
    old_code: str
    new_code: str
    old_comment: str
    language: str = "java"
    candidates: list[str] = Field(min_length=1)
    sigma: float = 0.35
    epsilon: float = 0.25
    rules: list[int] = [1, 2, 3]


class DiagnosticsModel(BaseModel):
    rule1_violated: bool
    rule1_evidence: list[str]
    rule2_violated: bool
    rule2_ratio: float
    rule3_violated: bool
    rule3_ratio: float
    rule3_vacuous: bool
    violations: list[int]


class RerankResponse(BaseModel):
    order: list[int]
    ranked: list[str]
    diagnostics: list[DiagnosticsModel]


class SyncRequest(BaseModel):
    target: SampleModel
    seed: int = 0


class CandidateModel(BaseModel):
    index: int
    raw: str
    text: str


class SyncResponse(BaseModel):
    target_id: str
    prompt_digest: Optional[str]
    demos: list[DemoModel]
    candidates: list[CandidateModel]
    ranked: list[str]
    diagnostics: list[DiagnosticsModel]
    usage: dict
    error: Optional[str]


class AnalyzeRequest(BaseModel):
    samples: list[SampleModel]


@dataclass
class ServiceState:
    config: RunConfig
    embed_provider: EmbeddingProvider
    index: Optional[DemonstrationIndex] = None
    engine: Optional[SyncEngine] = None
    ledger: TokenLedger = field(default_factory=TokenLedger)


def build_state(
    config: RunConfig,
    index_path: Optional[str] = None,
    train_path: Optional[str] = None,
    llm_provider: Optional[ChatProvider] = None,
) -> ServiceState:
    embed_provider = make_embed_provider(config)
    state = ServiceState(config=config, embed_provider=embed_provider)
    resolved_index = index_path or (
        str(config.resolved_index_path()) if config.resolved_index_path().exists() else None
    )
    if resolved_index:
        state.index = DemonstrationIndex.load(resolved_index)
    train = load_jsonl(train_path or config.train_path) if (train_path or _exists(config.train_path)) else []
    if state.index is not None and train:
        state.engine = SyncEngine.from_config(
            config,
            state.index,
            train,
            llm_provider=llm_provider or make_llm_provider(config),
            embed_provider=embed_provider,
        )
    return state


def _exists(path: str) -> bool:
    from pathlib import Path

    return bool(path) and Path(path).exists()


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="comsync", version=__version__)

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(
            status="ok",
            version=__version__,
            index_entries=len(state.index) if state.index else 0,
            embedding_kind=state.embed_provider.kind,
            dimension=state.embed_provider.dimension,
        )

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest):
        vectors = state.embed_provider.embed_many(request.texts)
        return EmbedResponse(vectors=[v.tolist() for v in vectors], dimension=state.embed_provider.dimension)

    @app.post("/retrieve", response_model=RetrieveResponse)
    def retrieve_demos(request: RetrieveRequest):
        if state.index is None:
            raise HTTPException(status_code=409, detail="no demonstration index loaded")
        try:
            result = retrieve(
                state.index,
                request.target.to_sample(),
                strategy=request.strategy,
                p=request.p,
                seed=request.seed,
                provider=state.embed_provider,
            )
        except (PoolTooSmall, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return RetrieveResponse(
            target_id=request.target.id,
            demos=[
                DemoModel(id=d.sample_id, pool=d.pool, score=d.score, rank_in_pool=d.rank_in_pool)
                for d in result.demos
            ],
        )

    @app.post("/rerank", response_model=RerankResponse)
    def rerank_candidates(request: RerankRequest):
        try:
            config = RerankConfig(
                sigma=request.sigma,
                epsilon=request.epsilon,
                enabled_rules=frozenset(request.rules),
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        sample = CCSample(
            id="adhoc",
            old_code=request.old_code,
            new_code=request.new_code,
            old_comment=request.old_comment,
            language=request.language,
        )
        result = rerank(RerankTarget.from_sample(sample), request.candidates, config)
        return RerankResponse(
            order=list(result.order),
            ranked=list(result.ranked),
            diagnostics=[DiagnosticsModel(**d.to_dict()) for d in result.diagnostics],
        )

    @app.post("/sync", response_model=SyncResponse)
    def sync_target(request: SyncRequest):
        if state.engine is None:
            raise HTTPException(status_code=409, detail="service started without an index and training corpus")
        target = request.target.to_sample()
        seed = derive_seed(request.seed, "target", target.id)
        record = state.engine.run_target(target, seed, state.ledger)
        return SyncResponse(
            target_id=record["target_id"],
            prompt_digest=record["prompt_digest"],
            demos=[DemoModel(**d) for d in record["demos"]],
            candidates=[CandidateModel(**c) for c in record["candidates"]],
            ranked=list(record["ranked_candidates"]),
            diagnostics=[DiagnosticsModel(**d) for d in record["diagnostics"]],
            usage=record["usage"],
            error=record["error"],
        )

    @app.post("/analyze")
    def analyze(request: AnalyzeRequest):
        try:
            analysis = analyze_corpus([s.to_sample() for s in request.samples])
        except Exception as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return analysis.to_dict()

    return app
