"""Offline embedding export: dataset JSONL in, embedding file out."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from . import fileio
from .registry import get_spec, load_encoder

__all__ = ["ExportJob", "export"]

logger = logging.getLogger(__name__)


@dataclass
class ExportJob:
    dataset_path: Path
    model_name: str
    output_path: Path
    split: str | None = None  # record range "start:stop", None for all
    batch_size: int = 32

    def __post_init__(self):
        get_spec(self.model_name)  # unknown model fails here, before any I/O
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.split is not None:
            self.parse_split()

    def parse_split(self):
        try:
            start_s, _, stop_s = self.split.partition(":")
            start = int(start_s) if start_s else 0
            stop = int(stop_s) if stop_s else None
        except ValueError:
            raise ValueError(
                f"split must look like 'start:stop', got {self.split!r}"
            ) from None
        return start, stop


def export(job: ExportJob) -> dict:
    """Embed every selected record, order preserved, labels block populated.

    Writes the embedding file plus a .json sidecar recording the model,
    pinned revision, dimension, and truncation count. Returns the sidecar
    payload.
    """
    spec = get_spec(job.model_name)
    texts, raw_labels = fileio.read_dataset(job.dataset_path)
    if job.split is not None:
        start, stop = job.parse_split()
        texts = texts[start:stop]
        raw_labels = raw_labels[start:stop]
        if not texts:
            raise ValueError(f"split {job.split!r} selects no records")
    labels, classes = fileio.map_labels(raw_labels)

    encoder = load_encoder(job.model_name)
    rows = encoder.encode(texts, batch_size=job.batch_size)
    if rows.shape != (len(texts), spec.dim):
        raise ValueError(
            f"{job.model_name} produced shape {rows.shape}, "
            f"expected ({len(texts)}, {spec.dim})"
        )

    fileio.write_embeddings(job.output_path, rows, labels)
    if encoder.truncated_count:
        logger.warning(
            "%d of %d texts exceeded the model's sequence cap and were truncated",
            encoder.truncated_count,
            len(texts),
        )
    meta = {
        "model": spec.name,
        "checkpoint": spec.checkpoint,
        "revision": spec.revision,
        "dim": spec.dim,
        "rows": len(texts),
        "classes": classes,
        "truncated": encoder.truncated_count,
    }
    Path(str(job.output_path) + ".json").write_text(json.dumps(meta), encoding="utf-8")
    return meta
