"""Run configuration, seed derivation, and the config hash used in manifests."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .gateway import CleaningConfig, SamplingConfig
from .rerank import RerankConfig


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any mix of labels and numbers.

    One master seed fans out to per-trial and per-target seeds via
    ``derive_seed(master, "trial", i)`` and
    ``derive_seed(trial_seed, "target", target_id)``.
    """
    blob = ":".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


@dataclass
class EmbeddingSettings:
    kind: str = "fallback"  # fallback | remote
    dimension: int = 256
    hash_seed: int = 0
    max_input_tokens: int = 512
    endpoint: Optional[str] = None
    batch_size: int = 32
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("fallback", "remote"):
            raise ValueError(f"unknown embedding kind: {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote embedding requires an endpoint")


@dataclass
class LLMSettings:
    kind: str = "mock"  # mock | openai
    model: str = "gpt-3.5-turbo"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    fixtures: Optional[str] = None  # mock script file: prompt digest -> completions
    supports_n: bool = True
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in ("mock", "openai"):
            raise ValueError(f"unknown llm kind: {self.kind!r}")


@dataclass
class RetrievalSettings:
    strategy: str = "ehr"
    p: int = 4

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("p must be non-negative")
        if self.strategy == "ehr" and self.p % 2 != 0:
            raise ValueError("p must be even for ehr retrieval")


@dataclass
class PriceSettings:
    input_per_million: float = 0.25
    output_per_million: float = 0.75


@dataclass
class RunConfig:
    train_path: str = "train.jsonl"
    test_path: str = "test.jsonl"
    output_dir: str = "run"
    index_path: Optional[str] = None  # default: <output_dir>/index.ndjson
    dataset_name: Optional[str] = None  # liu | panth | pai, picks rule thresholds
    embedding: EmbeddingSettings = field(default_factory=EmbeddingSettings)
    llm: LLMSettings = field(default_factory=LLMSettings)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    sigma: float = 0.35
    epsilon: float = 0.25
    rules: tuple[int, ...] = (1, 2, 3)
    count_distinct_novel: bool = False
    prices: PriceSettings = field(default_factory=PriceSettings)
    trials: int = 1
    seed: int = 0
    parallelism: int = 1
    template_path: Optional[str] = None
    delimiter: str = "END_OF_DEMO"
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be at least 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if self.dataset_name:
            from .rerank import DATASET_THRESHOLDS

            if self.dataset_name.lower() not in DATASET_THRESHOLDS:
                raise ValueError(f"unknown dataset name: {self.dataset_name!r}")

    def rerank_config(self, sigma: Optional[float] = None, epsilon: Optional[float] = None) -> RerankConfig:
        base_sigma, base_epsilon = self.sigma, self.epsilon
        if self.dataset_name:
            preset = RerankConfig.for_dataset(self.dataset_name)
            base_sigma, base_epsilon = preset.sigma, preset.epsilon
        return RerankConfig(
            sigma=sigma if sigma is not None else base_sigma,
            epsilon=epsilon if epsilon is not None else base_epsilon,
            enabled_rules=frozenset(self.rules),
            count_distinct_novel=self.count_distinct_novel,
        )

    def resolved_index_path(self) -> Path:
        if self.index_path:
            return Path(self.index_path)
        return Path(self.output_dir) / "index.ndjson"

    def to_dict(self) -> dict:
        record = asdict(self)
        record["rules"] = list(self.rules)
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "RunConfig":
        record = dict(record)
        for name, klass in (
            ("embedding", EmbeddingSettings),
            ("llm", LLMSettings),
            ("retrieval", RetrievalSettings),
            ("sampling", SamplingConfig),
            ("prices", PriceSettings),
            ("cleaning", CleaningConfig),
        ):
            if name in record and isinstance(record[name], dict):
                record[name] = klass(**record[name])
        if "rules" in record:
            record["rules"] = tuple(record["rules"])
        return cls(**record)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
