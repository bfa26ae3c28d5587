"""Serve the sidecar: ``nli-sidecar --port 9000`` or
``python -m nli_sidecar --stub-only`` for a dependency-free dev server."""

from __future__ import annotations

import argparse

from .app import create_app
from .registry import default_registry, stub_registry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nli-sidecar",
                                     description="NLI/embedding/BERTScore/"
                                                 "generation model server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9000)
    parser.add_argument("--device", default="cpu",
                        help="torch device for HF models (cpu, cuda, cuda:0)")
    parser.add_argument("--model", action="append", default=[], metavar="NAME=CHECKPOINT",
                        help="remap a friendly model name to a checkpoint or "
                             "local path (repeatable)")
    parser.add_argument("--stub-only", action="store_true",
                        help="serve deterministic stub models only (no torch)")
    return parser


def registry_from_args(args) -> object:
    if args.stub_only:
        return stub_registry()
    overrides = {}
    for mapping in args.model:
        if "=" not in mapping:
            raise SystemExit(f"--model expects NAME=CHECKPOINT, got {mapping!r}")
        name, _, checkpoint = mapping.partition("=")
        overrides[name] = checkpoint
    return default_registry(device=args.device, overrides=overrides)


def main(argv=None) -> None:
    import uvicorn

    args = build_parser().parse_args(argv)
    app = create_app(registry_from_args(args))
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
