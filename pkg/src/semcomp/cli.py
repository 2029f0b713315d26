"""Command-line interface.

Exit codes: 0 success, 2 file-format error, 3 shared-state desync,
4 embedding-service error, 1 anything else.
"""

import argparse
import csv
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import affinity, bench, fileio, huffman, pipelines
from .affinity import APConfig, ClusterModel
from .core import EmbeddingMemory, LabeledEmbeddings, quantize_batch
from .errors import DesyncError, FormatError, ServiceError
from .knn import KnnModel, predict_batch

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FORMAT = 2
EXIT_DESYNC = 3
EXIT_SERVICE = 4


def _add_ap_flags(p: argparse.ArgumentParser):
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--convergence-window", type=int, default=50)
    p.add_argument("--jitter-seed", type=int, default=0)
    p.add_argument("--jitter-scale", type=float, default=1e-9)


def _ap_config(args) -> APConfig:
    return APConfig(
        damping=args.damping,
        max_iterations=args.max_iterations,
        convergence_window=args.convergence_window,
        jitter_seed=args.jitter_seed,
        jitter_scale=args.jitter_scale,
    )


def _load_memory(path) -> EmbeddingMemory:
    loaded = fileio.read_embedding_file(path)
    if isinstance(loaded, LabeledEmbeddings):
        return EmbeddingMemory(loaded.embeddings)
    return loaded


def _load_labeled(path, what: str) -> LabeledEmbeddings:
    loaded = fileio.read_embedding_file(path)
    if not isinstance(loaded, LabeledEmbeddings):
        raise ValueError(f"{what} file must carry a label block")
    return loaded


def _load_rows(path) -> np.ndarray:
    loaded = fileio.read_embedding_file(path)
    return loaded.embeddings if isinstance(loaded, LabeledEmbeddings) else loaded.rows


@contextmanager
def _out_stream(path, newline=None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline=newline, encoding="utf-8") as f:
            yield f


def cmd_cluster(args) -> int:
    memory = _load_memory(args.memory)
    model = affinity.run(memory, _ap_config(args))
    payload = model.to_dict()
    payload["digest"] = model.digest()
    payload["memory_digest"] = memory.digest()
    if args.out:
        Path(args.out).write_text(json.dumps(payload), encoding="utf-8")
    print(f"clusters={model.n_clusters} digest={model.digest()}")
    return EXIT_OK


def _load_cluster_model(path, memory: EmbeddingMemory) -> ClusterModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    model = ClusterModel.from_dict(payload)
    if payload.get("digest") and model.digest() != payload["digest"]:
        raise DesyncError("cluster model digest does not match its contents")
    if payload.get("memory_digest") and memory.digest() != payload["memory_digest"]:
        raise DesyncError("cluster model was built from a different memory file")
    return model


def cmd_quantize(args) -> int:
    memory = _load_memory(args.memory)
    rows = _load_rows(args.embeddings)
    indices = quantize_batch(rows, memory)
    with _out_stream(args.out, newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["message_index", "memory_index"])
        for i, idx in enumerate(indices):
            writer.writerow([i, int(idx)])
    return EXIT_OK


def cmd_classify(args) -> int:
    train = _load_labeled(args.train, "train")
    loaded = fileio.read_embedding_file(args.embeddings)
    rows = loaded.embeddings if isinstance(loaded, LabeledEmbeddings) else loaded.rows
    model = KnnModel(train, args.k)
    predictions = predict_batch(rows, model)
    with _out_stream(args.out, newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["message_index", "prediction"])
        for i, p in enumerate(predictions):
            writer.writerow([i, int(p)])
    if isinstance(loaded, LabeledEmbeddings):
        acc = pipelines.accuracy(predictions, loaded.labels)
        print(f"accuracy={acc:.6f}", file=sys.stderr)
    return EXIT_OK


def _write_payload(path, stream: huffman.BitStream, meta: dict):
    Path(path).write_bytes(stream.to_bytes())
    Path(str(path) + ".meta.json").write_text(json.dumps(meta), encoding="utf-8")


def cmd_encode(args) -> int:
    if args.approach == "conventional":
        texts, raw_labels = fileio.read_dataset(args.dataset)
        per_message = [huffman.block_symbolize(t, args.block_size) for t in texts]
        all_symbols = [s for symbols, _ in per_message for s in symbols]
        table = huffman.count_frequencies(all_symbols)
        code = huffman.build_code(table)
        stream = huffman.encode(all_symbols, code)
        meta = {
            "approach": "conventional",
            "block_size": args.block_size,
            "alphabet": table.alphabet,
            "counts": table.counts,
            "messages": [
                {"n_symbols": len(symbols), "char_count": char_count}
                for symbols, char_count in per_message
            ],
        }
    elif args.approach == "quantization":
        memory = _load_memory(args.memory)
        rows = _load_rows(args.embeddings)
        indices = quantize_batch(rows, memory)
        code = huffman.build_code(pipelines.uniform_index_table(memory.n))
        stream = huffman.encode([int(i) for i in indices], code)
        meta = {
            "approach": "quantization",
            "n_memory": memory.n,
            "n_messages": len(indices),
            "memory_digest": memory.digest(),
        }
    else:
        memory = _load_memory(args.memory)
        model = _load_cluster_model(args.cluster_model, memory)
        rows = _load_rows(args.embeddings)
        labels = affinity.assign_batch(rows, model, memory)
        code = huffman.build_code(
            huffman.FrequencyTable(list(range(model.n_clusters)), model.sizes.tolist())
        )
        stream = huffman.encode([int(l) for l in labels], code)
        meta = {
            "approach": "compression",
            "n_messages": len(labels),
            "model_digest": model.digest(),
            "memory_digest": memory.digest(),
        }
    _write_payload(args.out, stream, meta)
    print(f"bits={stream.bit_length}")
    return EXIT_OK


def cmd_decode(args) -> int:
    stream = huffman.BitStream.from_bytes(Path(args.bits).read_bytes())
    meta = json.loads(Path(str(args.bits) + ".meta.json").read_text(encoding="utf-8"))
    approach = meta["approach"]
    if approach == "conventional":
        code = huffman.build_code(huffman.FrequencyTable(meta["alphabet"], meta["counts"]))
        symbols = huffman.decode(stream, code, sum(m["n_symbols"] for m in meta["messages"]))
        with _out_stream(args.out) as out:
            pos = 0
            for m in meta["messages"]:
                chunk = symbols[pos : pos + m["n_symbols"]]
                pos += m["n_symbols"]
                print(huffman.join_blocks(chunk, m["char_count"]), file=out)
    elif approach == "quantization":
        memory = _load_memory(args.memory)
        if meta.get("memory_digest") and memory.digest() != meta["memory_digest"]:
            raise DesyncError("decoder memory differs from the encoder's")
        code = huffman.build_code(pipelines.uniform_index_table(meta["n_memory"]))
        indices = huffman.decode(stream, code, meta["n_messages"])
        _emit_symbol_csv(args.out, "memory_index", indices)
        if args.emit_embeddings:
            rows = memory.rows[np.asarray(indices)]
            fileio.write_embedding_file(EmbeddingMemory(rows), args.emit_embeddings)
    else:
        memory = _load_memory(args.memory)
        model = _load_cluster_model(args.cluster_model, memory)
        if meta.get("model_digest") and model.digest() != meta["model_digest"]:
            raise DesyncError("decoder cluster model differs from the encoder's")
        code = huffman.build_code(
            huffman.FrequencyTable(list(range(model.n_clusters)), model.sizes.tolist())
        )
        labels = huffman.decode(stream, code, meta["n_messages"])
        _emit_symbol_csv(args.out, "cluster_label", labels)
        if args.emit_embeddings:
            rows = memory.rows[model.exemplar_indices][np.asarray(labels)]
            fileio.write_embedding_file(EmbeddingMemory(rows), args.emit_embeddings)
    return EXIT_OK


def _emit_symbol_csv(out_path, column, values):
    with _out_stream(out_path, newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["message_index", column])
        for i, v in enumerate(values):
            writer.writerow([i, int(v)])


def cmd_bench(args) -> int:
    config = bench.BenchConfig(
        dataset_path=args.dataset,
        memory_path=args.memory,
        train_path=args.train,
        test_embeddings_path=args.test_embeddings,
        out_dir=args.out_dir,
        n_memory=args.n_memory,
        k_knn=args.k,
        block_sizes=tuple(args.block_sizes),
        ap=_ap_config(args),
        test_cap=args.test_cap,
        subset_seed=args.subset_seed,
        service_url=bench.service_url_from_env(args.embed_url),
        use_fixture=args.fixture,
    )
    reports = bench.run_bench(config)
    print(bench.render_markdown(reports), end="")
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.csv, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    lines = ["| Approach | Number of Bits | Accuracy % |", "| --- | --- | --- |"]
    for row in rows:
        acc = float(row["accuracy"]) * 100
        lines.append(f"| {row['display']} | {row['total_bits']} | {acc:.2f} |")
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcomp",
        description="Meaning-preserving text compression and its benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster a memory file and print its digest")
    p.add_argument("--memory", required=True)
    p.add_argument("--out", help="write the cluster model JSON here")
    _add_ap_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("quantize", help="map embeddings to nearest memory indices")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--memory", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("classify", help="KNN-classify embeddings against a train file")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("encode", help="encode messages into a payload bitstream")
    p.add_argument("--approach", required=True,
                   choices=["conventional", "quantization", "compression"])
    p.add_argument("--dataset", help="JSONL dataset (conventional)")
    p.add_argument("--block-size", type=int, default=1)
    p.add_argument("--embeddings", help="corpus embeddings (semantic approaches)")
    p.add_argument("--memory")
    p.add_argument("--cluster-model", help="model JSON from `cluster` (compression)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a payload bitstream")
    p.add_argument("--bits", required=True)
    p.add_argument("--memory")
    p.add_argument("--cluster-model")
    p.add_argument("--out")
    p.add_argument("--emit-embeddings", help="write reconstructed embeddings here")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bench", help="run all approaches and write reports")
    p.add_argument("--dataset")
    p.add_argument("--memory")
    p.add_argument("--train")
    p.add_argument("--test-embeddings")
    p.add_argument("--out-dir", default="bench-out")
    p.add_argument("--n-memory", type=int)
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--block-sizes", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--test-cap", type=int, default=2000)
    p.add_argument("--subset-seed", type=int, default=0)
    p.add_argument("--embed-url", help=f"embedding service URL (or ${bench.ENV_SERVICE_URL})")
    p.add_argument("--fixture", action="store_true",
                   help="run on the bundled synthetic 3-class fixture")
    _add_ap_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render a bench CSV as a markdown table")
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except DesyncError as e:
        print(f"desync error: {e}", file=sys.stderr)
        return EXIT_DESYNC
    except ServiceError as e:
        print(f"service error: {e}", file=sys.stderr)
        return EXIT_SERVICE
    except (ValueError, OSError, KeyError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
