"""Chat-completion invocation: sampling config, candidate collection and
cleaning, token/cost ledger, and a deterministic mock provider for tests.

Candidate order always preserves provider return order (minus duplicates);
the re-ranking stage depends on that original relative order.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional, Protocol, Sequence

import httpx


class ProviderError(Exception):
    def __init__(self, message: str, attempts: int = 1):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class EmptyGeneration(Exception):
    pass


@dataclass(frozen=True)
class SamplingConfig:
    temperature: float = 0.8
    top_p: float = 0.95
    sampling_number: int = 10
    max_output_tokens: int = 256

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.sampling_number < 1:
            raise ValueError("sampling_number must be at least 1")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class CleaningConfig:
    strip_fences: bool = True
    strip_labels: bool = True
    first_line_only: bool = False


@dataclass(frozen=True)
class Candidate:
    raw: str
    text: str
    index: int  # position in the provider's return order


@dataclass(frozen=True)
class CandidateSet:
    target_id: str
    candidates: tuple[Candidate, ...]
    input_tokens: int
    output_tokens: int

    def texts(self) -> list[str]:
        return [c.text for c in self.candidates]


class TokenLedger:
    """Thread-safe running total of input/output tokens with optional cost."""

    def __init__(self):
        self._lock = threading.Lock()
        self._requests: list[tuple[int, int]] = []

    def record(self, input_tokens: int, output_tokens: int) -> None:
        with self._lock:
            self._requests.append((input_tokens, output_tokens))

    @property
    def requests(self) -> list[tuple[int, int]]:
        with self._lock:
            return list(self._requests)

    @property
    def input_tokens(self) -> int:
        with self._lock:
            return sum(i for i, _ in self._requests)

    @property
    def output_tokens(self) -> int:
        with self._lock:
            return sum(o for _, o in self._requests)

    def cost(self, input_price_per_million: float, output_price_per_million: float) -> float:
        """Dollar cost at the given per-million-token prices, rounded to the
        cent with conventional half-up rounding."""
        raw = (
            Decimal(self.input_tokens) * Decimal(str(input_price_per_million))
            + Decimal(self.output_tokens) * Decimal(str(output_price_per_million))
        ) / Decimal(1_000_000)
        return float(raw.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))

    def snapshot(self) -> dict:
        with self._lock:
            total_in = sum(i for i, _ in self._requests)
            total_out = sum(o for _, o in self._requests)
            return {
                "requests": len(self._requests),
                "input_tokens": total_in,
                "output_tokens": total_out,
            }


_FENCE = re.compile(r"^```[A-Za-z0-9_+-]*\n(.*?)\n?```$", re.DOTALL)
_LABEL = re.compile(r"^(?:new\s+comment|updated\s+comment|comment|answer|output)\s*[:\-]\s*", re.IGNORECASE)


def clean_completion(text: str, cleaning: CleaningConfig = CleaningConfig()) -> str:
    cleaned = text.strip()
    if cleaning.strip_fences:
        m = _FENCE.match(cleaned)
        if m:
            cleaned = m.group(1).strip()
    if cleaning.strip_labels:
        cleaned = _LABEL.sub("", cleaned, count=1).strip()
    if cleaning.first_line_only and cleaned:
        for line in cleaned.split("\n"):
            if line.strip():
                cleaned = line.strip()
                break
    return cleaned


def prompt_digest(system: str, user: str) -> str:
    h = hashlib.sha256()
    h.update(system.encode("utf-8"))
    h.update(b"\x00")
    h.update(user.encode("utf-8"))
    return h.hexdigest()


def _approx_tokens(text: str) -> int:
    return len(text.split())


class ChatProvider(Protocol):
    def complete(self, system: str, user: str, sampling: SamplingConfig) -> tuple[list[str], tuple[int, int]]:
        """Return (completions, (input tokens, output tokens))."""
        ...


class MockChatProvider:
    """Deterministic stand-in for a chat endpoint.

    ``script`` maps prompt digests to scripted completions (and optional
    usage). Unscripted prompts get distinct completions derived from the
    prompt digest and the provider seed, so full pipeline runs are
    reproducible without fixtures.
    """

    kind = "mock"

    def __init__(self, script: Optional[dict] = None, seed: int = 0):
        self.script = dict(script or {})
        self.seed = seed

    @classmethod
    def from_fixtures(cls, path: str | Path, seed: int = 0) -> "MockChatProvider":
        return cls(script=json.loads(Path(path).read_text(encoding="utf-8")), seed=seed)

    def complete(self, system: str, user: str, sampling: SamplingConfig) -> tuple[list[str], tuple[int, int]]:
        digest = prompt_digest(system, user)
        entry = self.script.get(digest)
        if entry is not None:
            completions = list(entry["completions"])[: sampling.sampling_number]
            usage = (
                int(entry.get("input_tokens", _approx_tokens(system) + _approx_tokens(user))),
                int(entry.get("output_tokens", sum(_approx_tokens(c) for c in completions))),
            )
            return completions, usage
        stamp = hashlib.sha256(f"{self.seed}:{digest}".encode("utf-8")).hexdigest()[:12]
        completions = [f"mock comment {stamp} variant {i}" for i in range(sampling.sampling_number)]
        usage = (_approx_tokens(system) + _approx_tokens(user), sum(_approx_tokens(c) for c in completions))
        return completions, usage


class OpenAIChatProvider:
    """OpenAI-compatible chat-completions client.

    One request asks for ``sampling_number`` completions via ``n``; when the
    endpoint lacks n-sampling, the same number of single requests is issued.
    Transient failures retry up to ``retries`` times with exponential backoff.
    """

    kind = "openai"

    def __init__(
        self,
        model: str,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
        supports_n: bool = True,
        client: Optional[httpx.Client] = None,
    ):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.supports_n = supports_n
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _request(self, body: dict) -> dict:
        url = f"{self.base_url}/chat/completions"
        last_error = "request failed"
        for attempt in range(1, self.retries + 1):
            try:
                response = self._client.post(url, json=body, headers=self._headers(), timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code == 200:
                    return response.json()
                last_error = f"HTTP {response.status_code}: {response.text[:200]}"
                if response.status_code not in (429, 500, 502, 503, 504):
                    raise ProviderError(last_error, attempts=attempt)
            if attempt < self.retries and self.backoff > 0:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
        raise ProviderError(last_error, attempts=self.retries)

    def _one_call(self, system: str, user: str, sampling: SamplingConfig, n: int) -> tuple[list[str], tuple[int, int]]:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "max_tokens": sampling.max_output_tokens,
        }
        if n > 1:
            body["n"] = n
        payload = self._request(body)
        completions = [choice.get("message", {}).get("content", "") or "" for choice in payload.get("choices", [])]
        usage = payload.get("usage", {})
        return completions, (int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)))

    def complete(self, system: str, user: str, sampling: SamplingConfig) -> tuple[list[str], tuple[int, int]]:
        if self.supports_n or sampling.sampling_number == 1:
            return self._one_call(system, user, sampling, sampling.sampling_number)
        completions: list[str] = []
        total_in = 0
        total_out = 0
        for _ in range(sampling.sampling_number):
            batch, (used_in, used_out) = self._one_call(system, user, sampling, 1)
            completions.extend(batch)
            total_in += used_in
            total_out += used_out
        return completions, (total_in, total_out)


def generate(
    provider: ChatProvider,
    target_id: str,
    system: str,
    user: str,
    sampling: SamplingConfig,
    ledger: Optional[TokenLedger] = None,
    cleaning: CleaningConfig = CleaningConfig(),
) -> CandidateSet:
    """One generation round for one target: invoke, clean, dedup, account."""
    completions, (input_tokens, output_tokens) = provider.complete(system, user, sampling)
    if ledger is not None:
        ledger.record(input_tokens, output_tokens)
    candidates: list[Candidate] = []
    seen: set[str] = set()
    for index, raw in enumerate(completions):
        text = clean_completion(raw, cleaning)
        if not text or text in seen:
            continue
        seen.add(text)
        candidates.append(Candidate(raw=raw, text=text, index=index))
    if not candidates:
        raise EmptyGeneration(f"target {target_id!r}: all candidates empty after cleaning")
    return CandidateSet(
        target_id=target_id,
        candidates=tuple(candidates),
        input_tokens=input_tokens,
        output_tokens=output_tokens,
    )


@dataclass
class GenerationOutcome:
    target_id: str
    candidate_set: Optional[CandidateSet] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class GenerationRequest:
    target_id: str
    system: str
    user: str


def batch_generate(
    provider: ChatProvider,
    requests: Sequence[GenerationRequest],
    sampling: SamplingConfig,
    parallelism: int = 1,
    ledger: Optional[TokenLedger] = None,
    cleaning: CleaningConfig = CleaningConfig(),
) -> list[GenerationOutcome]:
    """Generate for many targets; results come back in input order and a
    failing target never takes down the batch."""
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")

    def run_one(request: GenerationRequest) -> GenerationOutcome:
        try:
            candidate_set = generate(
                provider, request.target_id, request.system, request.user, sampling, ledger, cleaning
            )
            return GenerationOutcome(target_id=request.target_id, candidate_set=candidate_set)
        except Exception as exc:
            return GenerationOutcome(target_id=request.target_id, error=str(exc))

    if parallelism == 1:
        return [run_one(r) for r in requests]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(run_one, requests))
