"""Embedding micro-service: the /v1/embed endpoint the consumer toolkit's
client speaks to."""

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .registry import get_spec, load_encoder

__all__ = ["create_app", "serve", "DEFAULT_MAX_BATCH"]

DEFAULT_MAX_BATCH = 256


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(model_name: str, max_batch: int = DEFAULT_MAX_BATCH) -> FastAPI:
    spec = get_spec(model_name)
    encoder = load_encoder(model_name)
    app = FastAPI(title="embed-exporter", version="0.1.0")

    @app.get("/v1/health")
    def health():
        return {"model": spec.name, "dim": spec.dim}

    @app.post("/v1/embed")
    def embed(request: EmbedRequest):
        if len(request.texts) > max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.texts)} exceeds the {max_batch} cap",
            )
        vectors = encoder.encode(request.texts) if request.texts else []
        return {
            "embeddings": [v.tolist() for v in vectors],
            "model": spec.name,
            "dim": spec.dim,
        }

    return app


def serve(model_name: str, port: int, host: str = "127.0.0.1",
          max_batch: int = DEFAULT_MAX_BATCH):
    import uvicorn

    uvicorn.run(create_app(model_name, max_batch), host=host, port=port)
