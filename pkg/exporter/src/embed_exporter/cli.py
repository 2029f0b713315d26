"""Command-line interface: export, serve, project."""

import argparse
import logging
import sys

from .export import ExportJob, export
from .project import project_2d
from .registry import REGISTRY


def cmd_export(args) -> int:
    job = ExportJob(
        dataset_path=args.dataset,
        model_name=args.model,
        output_path=args.out,
        split=args.split,
        batch_size=args.batch_size,
    )
    meta = export(job)
    print(f"wrote {meta['rows']} x {meta['dim']} embeddings ({meta['model']})")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.model, args.port, host=args.host, max_batch=args.max_batch)
    return 0


def cmd_project(args) -> int:
    n = project_2d(args.embeddings, args.out, method=args.method)
    print(f"projected {n} rows -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-exporter",
        description="Compute sentence embeddings for datasets and serve them over HTTP",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    model_names = sorted(REGISTRY)

    p = sub.add_parser("export", help="embed a JSONL dataset into an embedding file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, choices=model_names)
    p.add_argument("--out", required=True)
    p.add_argument("--split", help="record range start:stop (default: all)")
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="serve /v1/embed for one model")
    p.add_argument("--model", required=True, choices=model_names)
    p.add_argument("--port", type=int, default=8099)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--max-batch", type=int, default=256)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("project", help="project an embedding file to 2-D CSV")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", default="pca", choices=["pca", "umap"])
    p.set_defaults(func=cmd_project)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
