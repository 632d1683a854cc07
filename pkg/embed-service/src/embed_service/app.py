"""The HTTP surface: POST /embed and GET /healthz.

Request handling is concurrent, but encoder inference is serialized behind a
lock; requests arriving before the model finished loading get HTTP 503.
"""

from __future__ import annotations

import argparse
import os
import threading
from typing import Callable, Optional

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .encoder import Encoder, load_encoder

DEFAULT_MAX_BATCH = 64


class EmbedRequest(BaseModel):
    texts: list[str]


class EmbedResponse(BaseModel):
    vectors: list[list[float]]
    dimension: int
    model_id: str


class HealthResponse(BaseModel):
    status: str
    version: str
    model_id: Optional[str]
    dimension: Optional[int]


class EncoderHolder:
    """Owns the encoder and its loading state."""

    def __init__(self):
        self._encoder: Optional[Encoder] = None
        self._error: Optional[str] = None
        self._ready = threading.Event()
        self._inference_lock = threading.Lock()

    def set(self, encoder: Encoder) -> None:
        self._encoder = encoder
        self._ready.set()

    def fail(self, message: str) -> None:
        self._error = message
        self._ready.set()

    def load_in_background(self, factory: Callable[[], Encoder]) -> None:
        def run():
            try:
                self.set(factory())
            except Exception as exc:
                self.fail(f"{type(exc).__name__}: {exc}")

        threading.Thread(target=run, daemon=True).start()

    @property
    def encoder(self) -> Optional[Encoder]:
        return self._encoder if self._ready.is_set() else None

    @property
    def loading(self) -> bool:
        return not self._ready.is_set()

    @property
    def error(self) -> Optional[str]:
        return self._error

    def encode(self, texts: list[str]) -> list[list[float]]:
        assert self._encoder is not None
        with self._inference_lock:
            return self._encoder.encode(texts)


def create_app(
    encoder: Optional[Encoder] = None,
    encoder_factory: Optional[Callable[[], Encoder]] = None,
    max_batch: int = DEFAULT_MAX_BATCH,
    auth_token: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="embed-service", version=__version__)
    holder = EncoderHolder()
    if encoder is not None:
        holder.set(encoder)
    elif encoder_factory is not None:
        holder.load_in_background(encoder_factory)
    else:
        raise ValueError("create_app needs an encoder or an encoder_factory")

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def check_auth(token: Optional[str]) -> None:
        if auth_token and token != auth_token:
            raise HTTPException(status_code=401, detail="missing or invalid token")

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        active = holder.encoder
        return HealthResponse(
            status="loading" if holder.loading else ("error" if holder.error else "ok"),
            version=__version__,
            model_id=active.model_id if active else None,
            dimension=active.dimension if active else None,
        )

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest, x_auth_token: Optional[str] = Header(default=None)):
        check_auth(x_auth_token)
        if holder.loading:
            raise HTTPException(status_code=503, detail="model is loading")
        if holder.error:
            raise HTTPException(status_code=500, detail=f"encoder failed to load: {holder.error}")
        if len(request.texts) > max_batch:
            raise HTTPException(status_code=413, detail=f"batch too large; limit is {max_batch}")
        encoder_ = holder.encoder
        vectors = holder.encode(request.texts) if request.texts else []
        return EmbedResponse(vectors=vectors, dimension=encoder_.dimension, model_id=encoder_.model_id)

    return app


def main(argv=None):
    import uvicorn

    parser = argparse.ArgumentParser(description="Embedding sidecar")
    parser.add_argument("--model-id", default="microsoft/codebert-base",
                        help="Hugging Face model id, or random-init:<dim>[:<seed>] for the offline backend")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8100)
    parser.add_argument("--max-tokens", type=int, default=512)
    parser.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    parser.add_argument("--token-env", default="EMBED_SERVICE_TOKEN",
                        help="Env var holding the shared auth token; unset disables auth")
    args = parser.parse_args(argv)

    app = create_app(
        encoder_factory=lambda: load_encoder(args.model_id, max_tokens=args.max_tokens),
        max_batch=args.max_batch,
        auth_token=os.environ.get(args.token_env) or None,
    )
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
