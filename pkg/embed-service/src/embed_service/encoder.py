"""Encoder backends.

Both backends return the [CLS]-position hidden state per input text and run
in eval mode, so repeated requests for the same text produce identical
vectors. The pretrained backend is the fidelity path; the random-init
backend needs no downloaded weights and exists for offline deployments and
tests.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import torch
from transformers import AutoModel, AutoTokenizer, BertConfig, BertModel


class Encoder(Protocol):
    model_id: str
    dimension: int

    def encode(self, texts: Sequence[str]) -> list[list[float]]: ...


class PretrainedEncoder:
    """A Hugging Face encoder (default: a code-pretrained BERT-style model)."""

    def __init__(self, model_id: str = "microsoft/codebert-base", max_tokens: int = 512):
        self.model_id = model_id
        self.max_tokens = max_tokens
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModel.from_pretrained(model_id)
        self.model.eval()
        self.dimension = int(self.model.config.hidden_size)

    @torch.no_grad()
    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        if not texts:
            return []
        batch = self.tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=self.max_tokens,
            return_tensors="pt",
            add_special_tokens=True,
        )
        output = self.model(**batch)
        return output.last_hidden_state[:, 0, :].tolist()


_PAD_ID = 0
_CLS_ID = 1
_SEP_ID = 2
_RESERVED = 3


class RandomInitEncoder:
    """Deterministic, weight-download-free transformer encoder.

    A small randomly initialized (fixed seed) BERT runs over ids produced by
    a hash tokenizer. Useful wherever pretrained weights cannot be fetched;
    the service contract (shape, determinism, [CLS] pooling) is identical to
    the pretrained path.
    """

    def __init__(self, dimension: int = 64, seed: int = 0, max_tokens: int = 126, vocab_size: int = 4096):
        torch.manual_seed(seed)
        config = BertConfig(
            vocab_size=vocab_size,
            hidden_size=dimension,
            num_hidden_layers=2,
            num_attention_heads=max(1, dimension // 16),
            intermediate_size=dimension * 2,
            max_position_embeddings=max_tokens + 2,
            pad_token_id=_PAD_ID,
        )
        self.model = BertModel(config)
        self.model.eval()
        self.model_id = f"random-init-bert:{dimension}d:seed{seed}"
        self.dimension = dimension
        self.max_tokens = max_tokens
        self.vocab_size = vocab_size

    def _token_ids(self, text: str) -> list[int]:
        ids = [_CLS_ID]
        for word in text.split()[: self.max_tokens]:
            digest = hashlib.sha256(word.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % (self.vocab_size - _RESERVED)
            ids.append(_RESERVED + bucket)
        ids.append(_SEP_ID)
        return ids

    @torch.no_grad()
    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        if not texts:
            return []
        rows = [self._token_ids(t) for t in texts]
        width = max(len(r) for r in rows)
        input_ids = torch.full((len(rows), width), _PAD_ID, dtype=torch.long)
        attention = torch.zeros((len(rows), width), dtype=torch.long)
        for i, row in enumerate(rows):
            input_ids[i, : len(row)] = torch.tensor(row, dtype=torch.long)
            attention[i, : len(row)] = 1
        output = self.model(input_ids=input_ids, attention_mask=attention)
        return output.last_hidden_state[:, 0, :].tolist()


def load_encoder(model_id: str, max_tokens: int = 512) -> Encoder:
    """``random-init:<dim>[:<seed>]`` selects the offline backend; anything
    else is treated as a Hugging Face model id."""
    if model_id.startswith("random-init"):
        parts = model_id.split(":")
        dimension = int(parts[1]) if len(parts) > 1 else 64
        seed = int(parts[2]) if len(parts) > 2 else 0
        return RandomInitEncoder(dimension=dimension, seed=seed)
    return PretrainedEncoder(model_id=model_id, max_tokens=max_tokens)
