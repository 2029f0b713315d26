"""Sentence-encoder registry.

Three pretrained all-purpose checkpoints are pinned (name, revision, output
dimension), plus a deterministic hashing encoder that needs no downloads and
keeps the export/serve/project contracts testable offline. Real checkpoints
load through sentence-transformers when it (and the weights) are available.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["ModelSpec", "REGISTRY", "get_spec", "load_encoder", "model_available"]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    dim: int
    checkpoint: str | None  # sentence-transformers id; None for local encoders
    revision: str | None = None
    # On CPU the pinned checkpoints are repeatable to ~1e-6 absolute across
    # runs; the hashing encoder is exact.
    repeat_atol: float = 1e-6


REGISTRY = {
    "all-mpnet-base-v2": ModelSpec(
        "all-mpnet-base-v2", 768, "sentence-transformers/all-mpnet-base-v2"
    ),
    "all-distilroberta-v1": ModelSpec(
        "all-distilroberta-v1", 768, "sentence-transformers/all-distilroberta-v1"
    ),
    "all-MiniLM-L12-v2": ModelSpec(
        "all-MiniLM-L12-v2", 384, "sentence-transformers/all-MiniLM-L12-v2"
    ),
    "hashing-16": ModelSpec("hashing-16", 16, None, repeat_atol=0.0),
}


def get_spec(name: str) -> ModelSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; registered: {sorted(REGISTRY)}"
        ) from None


class HashingEncoder:
    """Deterministic bag-of-words encoder: each token hashes to a fixed
    pseudo-random direction and a text is the normalized token sum.

    Texts sharing vocabulary land near each other, which is all the offline
    tests need. max_tokens mimics the sequence cap of the real encoders.
    """

    def __init__(self, dim: int, max_tokens: int = 256):
        self.dim = dim
        self.max_tokens = max_tokens
        self.truncated_count = 0
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is None:
            seed = int.from_bytes(hashlib.sha256(token.encode()).digest()[:8], "little")
            rng = np.random.Generator(np.random.PCG64(seed))
            vec = rng.normal(size=self.dim)
            cached = vec / np.linalg.norm(vec)
            self._token_cache[token] = cached
        return cached

    def encode(self, texts, batch_size: int = 32) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            tokens = text.lower().split()
            if len(tokens) > self.max_tokens:
                tokens = tokens[: self.max_tokens]
                self.truncated_count += 1
            if not tokens:
                continue
            total = np.zeros(self.dim)
            for tok in tokens:
                total += self._token_vector(tok)
            norm = np.linalg.norm(total)
            if norm > 0:
                total /= norm
            out[i] = total.astype(np.float32)
        return out


class TransformerEncoder:
    """sentence-transformers wrapper with truncation accounting."""

    def __init__(self, spec: ModelSpec):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(spec.checkpoint, revision=spec.revision)
        got = self._model.get_sentence_embedding_dimension()
        if got != spec.dim:
            raise ValueError(
                f"{spec.name}: checkpoint dimension {got} != registered {spec.dim}"
            )
        self.dim = spec.dim
        self.truncated_count = 0
        self._max_len = getattr(self._model, "max_seq_length", None)

    def encode(self, texts, batch_size: int = 32) -> np.ndarray:
        if self._max_len:
            tokenizer = self._model.tokenizer
            for t in texts:
                if len(tokenizer.encode(t)) > self._max_len:
                    self.truncated_count += 1
        vectors = self._model.encode(
            list(texts),
            batch_size=batch_size,
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float32)


def load_encoder(name: str):
    spec = get_spec(name)
    if spec.checkpoint is None:
        return HashingEncoder(spec.dim)
    return TransformerEncoder(spec)


def model_available(name: str) -> bool:
    """True if the encoder can actually be constructed here (weights on disk
    or no weights needed)."""
    spec = get_spec(name)
    if spec.checkpoint is None:
        return True
    try:
        load_encoder(name)
        return True
    except Exception:
        return False
