"""The three encode -> bits -> decode -> classify flows, with exact bit
accounting.

conventional   Huffman over K-character blocks, lossless text reconstruction,
               classification from the message's own embedding.
quantization   each message becomes the index of its nearest memory row; the
               index alphabet is coded uniformly (every row "self-assigns"
               exactly once), and the decoder classifies the looked-up row.
compression    the memory is clustered once on both sides; messages become
               cluster labels coded with cluster-size frequencies, and the
               decoder classifies the exemplar embedding.

All reported bits are payload only; code tables are derivable on both sides
from shared state and never travel.
"""

from dataclasses import dataclass, field

import numpy as np

from . import affinity, huffman
from .affinity import APConfig, ClusterModel
from .core import EmbeddingMemory, LabeledEmbeddings, quantize_batch
from .errors import ReconstructionError
from .knn import KnnModel, predict_batch

__all__ = [
    "Corpus",
    "PipelineReport",
    "run_conventional",
    "run_quantization",
    "run_compression",
    "compression_ratio",
    "accuracy",
    "sweep_memory_size",
]


@dataclass
class Corpus:
    """Evaluation messages with ground-truth labels and precomputed embeddings."""

    texts: list
    labels: np.ndarray
    embeddings: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.embeddings = np.asarray(self.embeddings, dtype=np.float32)
        if not (len(self.texts) == len(self.labels) == len(self.embeddings)):
            raise ValueError("texts, labels and embeddings must have equal lengths")
        if len(self.texts) == 0:
            raise ValueError("corpus is empty")
        if self.embeddings.ndim != 2:
            raise ValueError("embeddings must be a T x p matrix")

    @property
    def size(self) -> int:
        return len(self.texts)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass
class PipelineReport:
    approach: str
    total_bits: int
    accuracy: float
    message_bits: list
    n_clusters: int | None = None
    predictions: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.total_bits != sum(self.message_bits):
            raise ValueError("total_bits must equal the sum of per-message bits")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must be a fraction in [0, 1]")


def accuracy(predictions, truth) -> float:
    """Exact-match fraction."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValueError("predictions and truth lengths differ")
    if predictions.size == 0:
        raise ValueError("cannot score an empty prediction set")
    return float(np.mean(predictions == truth))


def _check_dims(corpus: Corpus, memory: EmbeddingMemory | None, train: LabeledEmbeddings):
    if memory is not None and corpus.dim != memory.dim:
        raise ValueError(f"corpus dim {corpus.dim} != memory dim {memory.dim}")
    if corpus.dim != train.dim:
        raise ValueError(f"corpus dim {corpus.dim} != train dim {train.dim}")


def run_conventional(
    corpus: Corpus, k_block: int, train: LabeledEmbeddings, k_knn: int = 15
) -> PipelineReport:
    """Block-Huffman baseline: exact text reconstruction, then classify.

    Frequencies come from the whole corpus symbol stream; every message must
    decode back to its original text bit-for-bit.
    """
    if k_block < 1:
        raise ValueError("block size must be >= 1")
    _check_dims(corpus, None, train)

    per_message = [huffman.block_symbolize(t, k_block) for t in corpus.texts]
    all_symbols = [s for symbols, _ in per_message for s in symbols]
    code = huffman.build_code(huffman.count_frequencies(all_symbols))

    message_bits = []
    for text, (symbols, char_count) in zip(corpus.texts, per_message):
        stream = huffman.encode(symbols, code)
        message_bits.append(stream.bit_length)
        decoded = huffman.decode(stream, code, len(symbols))
        rebuilt = huffman.join_blocks(decoded, char_count)
        if rebuilt != text:
            raise ReconstructionError(
                f"block round-trip altered a message (K={k_block}): {text[:40]!r}..."
            )

    model = KnnModel(train, k_knn)
    predictions = predict_batch(corpus.embeddings, model)
    return PipelineReport(
        approach=f"conventional-k{k_block}",
        total_bits=sum(message_bits),
        accuracy=accuracy(predictions, corpus.labels),
        message_bits=message_bits,
        predictions=predictions,
    )


def uniform_index_table(n: int) -> huffman.FrequencyTable:
    """Self-assignment counts of the memory: each row indexes itself once."""
    return huffman.FrequencyTable(list(range(n)), [1] * n)


def run_quantization(
    corpus: Corpus, memory: EmbeddingMemory, train: LabeledEmbeddings, k_knn: int = 15
) -> PipelineReport:
    """Nearest-memory-row indices, Huffman coded over the N-symbol alphabet."""
    _check_dims(corpus, memory, train)
    indices = quantize_batch(corpus.embeddings, memory)
    code = huffman.build_code(uniform_index_table(memory.n))

    message_bits = []
    decoded_indices = []
    for idx in indices:
        stream = huffman.encode([int(idx)], code)
        message_bits.append(stream.bit_length)
        (back,) = huffman.decode(stream, code, 1)
        decoded_indices.append(back)
    if decoded_indices != [int(i) for i in indices]:
        raise ReconstructionError("decoded index differs from encoded index")

    reconstructed = memory.rows[np.asarray(decoded_indices)]
    model = KnnModel(train, k_knn)
    predictions = predict_batch(reconstructed, model)
    return PipelineReport(
        approach="quantization",
        total_bits=sum(message_bits),
        accuracy=accuracy(predictions, corpus.labels),
        message_bits=message_bits,
        predictions=predictions,
    )


def run_compression(
    corpus: Corpus,
    memory: EmbeddingMemory,
    train: LabeledEmbeddings,
    ap_config: APConfig | None = None,
    k_knn: int = 15,
    cluster_model: ClusterModel | None = None,
) -> PipelineReport:
    """Cluster labels instead of indices: a smaller, skewed alphabet.

    The decoder rebuilds the identical cluster model from the shared memory
    (clustering is deterministic), so only the label needs to travel.
    """
    _check_dims(corpus, memory, train)
    if cluster_model is None:
        cluster_model = affinity.run(memory, ap_config or APConfig())
    labels = affinity.assign_batch(corpus.embeddings, cluster_model, memory)
    code = huffman.build_code(
        huffman.FrequencyTable(
            list(range(cluster_model.n_clusters)), cluster_model.sizes.tolist()
        )
    )

    message_bits = []
    decoded_labels = []
    for lab in labels:
        stream = huffman.encode([int(lab)], code)
        message_bits.append(stream.bit_length)
        (back,) = huffman.decode(stream, code, 1)
        decoded_labels.append(back)
    if decoded_labels != [int(l) for l in labels]:
        raise ReconstructionError("decoded cluster label differs from encoded label")

    exemplar_rows = memory.rows[cluster_model.exemplar_indices]
    reconstructed = exemplar_rows[np.asarray(decoded_labels)]
    model = KnnModel(train, k_knn)
    predictions = predict_batch(reconstructed, model)
    return PipelineReport(
        approach="compression",
        total_bits=sum(message_bits),
        accuracy=accuracy(predictions, corpus.labels),
        message_bits=message_bits,
        n_clusters=cluster_model.n_clusters,
        predictions=predictions,
    )


def compression_ratio(report: PipelineReport, baseline_report: PipelineReport) -> float:
    """Baseline payload bits over this approach's payload bits."""
    if report.total_bits <= 0 or baseline_report.total_bits <= 0:
        raise ValueError("compression ratio needs positive bit counts")
    return baseline_report.total_bits / report.total_bits


def sweep_memory_size(
    corpus: Corpus,
    full_memory: EmbeddingMemory,
    train: LabeledEmbeddings,
    n_values,
    ap_config: APConfig | None = None,
    k_knn: int = 15,
) -> list:
    """Both semantic pipelines over deterministic memory prefixes of each N."""
    reports = []
    for n in n_values:
        memory = full_memory if n == full_memory.n else full_memory.truncate(n)
        q = run_quantization(corpus, memory, train, k_knn=k_knn)
        c = run_compression(corpus, memory, train, ap_config=ap_config, k_knn=k_knn)
        q.approach = f"quantization-n{n}"
        c.approach = f"compression-n{n}"
        reports.extend([q, c])
    return reports
