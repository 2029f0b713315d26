"""semcomp: meaning-preserving text compression for classification.

Messages are represented either by the index of their nearest neighbor in a
shared embedding memory, or by the cluster label of that memory's exemplar
structure; either symbol is entropy coded and classified at the decoder by
KNN in embedding space. A character-block Huffman baseline provides the
lossless comparison point.
"""

from .affinity import APConfig, ClusterModel, assign_to_exemplar, build_similarity, run
from .core import (
    EmbeddingMemory,
    LabeledEmbeddings,
    quantize_index,
    semantic_distance,
    semantic_distortion,
)
from .huffman import BitStream, FrequencyTable, HuffmanCode, build_code, count_frequencies
from .knn import KnnModel, predict, predict_batch
from .pipelines import (
    Corpus,
    PipelineReport,
    accuracy,
    compression_ratio,
    run_compression,
    run_conventional,
    run_quantization,
    sweep_memory_size,
)

__version__ = "0.1.0"

__all__ = [
    "APConfig",
    "BitStream",
    "ClusterModel",
    "Corpus",
    "EmbeddingMemory",
    "FrequencyTable",
    "HuffmanCode",
    "KnnModel",
    "LabeledEmbeddings",
    "PipelineReport",
    "accuracy",
    "assign_to_exemplar",
    "build_code",
    "build_similarity",
    "compression_ratio",
    "count_frequencies",
    "predict",
    "predict_batch",
    "quantize_index",
    "run",
    "run_compression",
    "run_conventional",
    "run_quantization",
    "semantic_distance",
    "semantic_distortion",
    "sweep_memory_size",
]
