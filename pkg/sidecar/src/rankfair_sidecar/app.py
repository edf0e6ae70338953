"""The sidecar HTTP application.

Wire protocol (one model per process):

* ``POST /v1/embed`` with ``{"texts": [...], "role": "query"|"passage"}``
  returns ``{"model": str, "dim": int, "vectors": [[...], ...]}``,
  order-preserving, one vector per text.
* ``GET /v1/info`` returns ``{"model": str, "dim": int}``; constant for the
  process lifetime.
* ``GET /v1/health`` returns 200 once the model is ready.

Errors: 400 for empty, oversized or malformed batches, 503 while the model
is still loading, 500 when inference fails.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from typing import Callable

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

DEFAULT_BATCH_LIMIT = 128

VALID_ROLES = ("query", "passage")


class EmbedRequest(BaseModel):
    texts: list[str]
    role: str = "query"


def create_app(
    encoder=None,
    encoder_factory: Callable[[], object] | None = None,
    batch_limit: int = DEFAULT_BATCH_LIMIT,
) -> FastAPI:
    """Build the app around a ready encoder or a factory loaded on startup.

    With a factory, the model loads in a background thread and every
    endpoint answers 503 until it is ready; a failed load is reported as a
    503 with the failure message (the process is useless at that point, but
    it should say why instead of hanging clients).
    """
    if (encoder is None) == (encoder_factory is None):
        raise ValueError("pass exactly one of encoder or encoder_factory")

    state = {"encoder": encoder, "load_error": None}
    inference_lock = threading.Lock()

    if encoder_factory is not None:

        def load() -> None:
            try:
                state["encoder"] = encoder_factory()
            except Exception as exc:  # surfaced via 503 bodies
                state["load_error"] = str(exc)

        @asynccontextmanager
        async def lifespan(_app: FastAPI):
            threading.Thread(target=load, daemon=True).start()
            yield

        app = FastAPI(title="rankfair embedding sidecar", lifespan=lifespan)
    else:
        app = FastAPI(title="rankfair embedding sidecar")

    def not_ready() -> JSONResponse | None:
        if state["encoder"] is not None:
            return None
        if state["load_error"] is not None:
            return JSONResponse(
                status_code=503, content={"error": f"model failed to load: {state['load_error']}"}
            )
        return JSONResponse(status_code=503, content={"error": "model loading"})

    @app.get("/v1/health")
    def health():
        waiting = not_ready()
        if waiting is not None:
            return waiting
        return {"status": "ok"}

    @app.get("/v1/info")
    def info():
        waiting = not_ready()
        if waiting is not None:
            return waiting
        enc = state["encoder"]
        return {"model": enc.name, "dim": enc.dim}

    @app.post("/v1/embed")
    def embed(request: EmbedRequest):
        waiting = not_ready()
        if waiting is not None:
            return waiting
        if not request.texts:
            return JSONResponse(status_code=400, content={"error": "empty batch"})
        if len(request.texts) > batch_limit:
            return JSONResponse(
                status_code=400,
                content={"error": f"batch of {len(request.texts)} exceeds limit {batch_limit}"},
            )
        if request.role not in VALID_ROLES:
            return JSONResponse(
                status_code=400, content={"error": f"role must be one of {VALID_ROLES}"}
            )
        for text in request.texts:
            if not text.strip():
                return JSONResponse(status_code=400, content={"error": "empty text in batch"})
        enc = state["encoder"]
        try:
            with inference_lock:
                vectors = enc.encode(list(request.texts), request.role)
        except Exception as exc:
            return JSONResponse(status_code=500, content={"error": f"inference failed: {exc}"})
        return {
            "model": enc.name,
            "dim": enc.dim,
            "vectors": [[float(x) for x in row] for row in vectors],
        }

    return app
