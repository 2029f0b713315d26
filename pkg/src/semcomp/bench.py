"""Benchmark orchestration: run all approaches over one corpus and write
deterministic report artifacts (CSV, markdown, payload bitstreams)."""

import csv
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import affinity, fileio, huffman, pipelines
from .affinity import APConfig
from .core import EmbeddingMemory, LabeledEmbeddings
from .fixture import generate_fixture
from .pipelines import Corpus, PipelineReport

__all__ = ["BenchConfig", "run_bench", "render_markdown", "load_corpus"]

ENV_SERVICE_URL = "SEMCOMP_EMBED_URL"


@dataclass
class BenchConfig:
    dataset_path: Path | None = None
    memory_path: Path | None = None
    train_path: Path | None = None
    test_embeddings_path: Path | None = None
    out_dir: Path = Path("bench-out")
    n_memory: int | None = None
    k_knn: int = 15
    block_sizes: tuple = (1, 2, 3)
    ap: APConfig = field(default_factory=APConfig)
    test_cap: int = 2000
    subset_seed: int = 0
    service_url: str | None = None
    use_fixture: bool = False

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if not self.use_fixture:
            for name in ("dataset_path", "memory_path", "train_path"):
                if getattr(self, name) is None:
                    raise ValueError(f"{name} is required unless running the fixture")
            if self.test_embeddings_path is None and self.service_url is None:
                raise ValueError(
                    "either test_embeddings_path or a service URL must be given"
                )


def load_corpus(config: BenchConfig) -> Corpus:
    """Texts and labels from the dataset file, embeddings from file or service."""
    texts, raw_labels = fileio.read_dataset(config.dataset_path)
    labels, _ = fileio.map_labels(raw_labels)

    keep = fileio.select_test_subset(labels, config.test_cap, config.subset_seed)
    texts = [texts[i] for i in keep]
    labels = labels[keep]

    if config.test_embeddings_path is not None:
        loaded = fileio.read_embedding_file(config.test_embeddings_path)
        if isinstance(loaded, LabeledEmbeddings):
            rows = loaded.embeddings
            file_labels = loaded.labels
        else:
            rows = loaded.rows
            file_labels = None
        if len(rows) not in (len(keep), len(raw_labels)):
            raise ValueError(
                f"test embedding rows ({len(rows)}) match neither the dataset "
                f"({len(raw_labels)}) nor the selected subset ({len(keep)})"
            )
        if len(rows) == len(raw_labels) and len(keep) != len(raw_labels):
            rows = rows[keep]
            file_labels = file_labels[keep] if file_labels is not None else None
        if file_labels is not None:
            fileio.check_corpus_labels(labels, file_labels, "test corpus")
        embeddings = rows
    else:
        vectors = fileio.fetch_embeddings(texts, config.service_url)
        embeddings = np.vstack(vectors)
    return Corpus(texts, labels, embeddings)


def _load_inputs(config: BenchConfig):
    if config.use_fixture:
        memory, train, corpus = generate_fixture()
    else:
        memory = fileio.read_embedding_file(config.memory_path)
        if isinstance(memory, LabeledEmbeddings):
            memory = EmbeddingMemory(memory.embeddings)
        train = fileio.read_embedding_file(config.train_path)
        if not isinstance(train, LabeledEmbeddings):
            raise ValueError("train embeddings file must carry a label block")
        corpus = load_corpus(config)
    if config.n_memory is not None:
        if config.n_memory > memory.n:
            raise ValueError(
                f"requested N={config.n_memory} exceeds the {memory.n}-row memory"
            )
        if config.n_memory < memory.n:
            memory = memory.truncate(config.n_memory)
    return memory, train, corpus


def run_bench(config: BenchConfig) -> list:
    """Run every approach, write report files, return the PipelineReports."""
    memory, train, corpus = _load_inputs(config)
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)

    reports: list[PipelineReport] = []
    payloads: dict[str, huffman.BitStream] = {}

    for k_block in config.block_sizes:
        report = pipelines.run_conventional(corpus, k_block, train, k_knn=config.k_knn)
        reports.append(report)
        payloads[report.approach] = _conventional_payload(corpus, k_block)

    q_report = pipelines.run_quantization(corpus, memory, train, k_knn=config.k_knn)
    reports.append(q_report)
    payloads[q_report.approach] = _quantization_payload(corpus, memory)

    cluster_model = affinity.run(memory, config.ap)
    c_report = pipelines.run_compression(
        corpus, memory, train, k_knn=config.k_knn, cluster_model=cluster_model
    )
    reports.append(c_report)
    payloads[c_report.approach] = _compression_payload(corpus, memory, cluster_model)

    for approach, stream in payloads.items():
        (out / f"{approach}.bits").write_bytes(stream.to_bytes())
    (out / "report.csv").write_text(_summary_csv(reports), encoding="utf-8")
    (out / "message_bits.csv").write_text(_message_csv(reports), encoding="utf-8")
    (out / "report.md").write_text(render_markdown(reports), encoding="utf-8")
    return reports


def _conventional_payload(corpus: Corpus, k_block: int) -> huffman.BitStream:
    per_message = [huffman.block_symbolize(t, k_block) for t in corpus.texts]
    all_symbols = [s for symbols, _ in per_message for s in symbols]
    code = huffman.build_code(huffman.count_frequencies(all_symbols))
    return huffman.encode(all_symbols, code)


def _quantization_payload(corpus: Corpus, memory: EmbeddingMemory) -> huffman.BitStream:
    from .core import quantize_batch

    indices = quantize_batch(corpus.embeddings, memory)
    code = huffman.build_code(pipelines.uniform_index_table(memory.n))
    return huffman.encode([int(i) for i in indices], code)


def _compression_payload(corpus, memory, cluster_model) -> huffman.BitStream:
    labels = affinity.assign_batch(corpus.embeddings, cluster_model, memory)
    code = huffman.build_code(
        huffman.FrequencyTable(
            list(range(cluster_model.n_clusters)), cluster_model.sizes.tolist()
        )
    )
    return huffman.encode([int(l) for l in labels], code)


def display_name(report: PipelineReport) -> str:
    if report.approach.startswith("conventional-k"):
        k = report.approach.removeprefix("conventional-k")
        return "Conventional" if k == "1" else f"Conventional - Size {k}"
    if report.approach.startswith("quantization"):
        return "Semantic Quantization"
    if report.approach.startswith("compression"):
        if report.n_clusters is not None:
            return f"Semantic Compression - {report.n_clusters}"
        return "Semantic Compression"
    return report.approach


def _baseline_bits(reports) -> int | None:
    for r in reports:
        if r.approach == "conventional-k1":
            return r.total_bits
    return None


def _summary_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["approach", "display", "total_bits", "accuracy", "n_clusters", "ratio_vs_conventional_k1"]
    )
    base = _baseline_bits(reports)
    for r in reports:
        ratio = f"{base / r.total_bits:.6f}" if base else ""
        writer.writerow(
            [
                r.approach,
                display_name(r),
                r.total_bits,
                f"{r.accuracy:.6f}",
                "" if r.n_clusters is None else r.n_clusters,
                ratio,
            ]
        )
    return buf.getvalue()


def _message_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["approach", "message_index", "bits"])
    for r in reports:
        for i, bits in enumerate(r.message_bits):
            writer.writerow([r.approach, i, bits])
    return buf.getvalue()


def render_markdown(reports) -> str:
    lines = [
        "| Approach | Number of Bits | Accuracy % |",
        "| --- | --- | --- |",
    ]
    for r in reports:
        lines.append(f"| {display_name(r)} | {r.total_bits} | {r.accuracy * 100:.2f} |")
    return "\n".join(lines) + "\n"


def service_url_from_env(explicit: str | None) -> str | None:
    return os.environ.get(ENV_SERVICE_URL, explicit)
