"""Command-line entry points: generate / simulate / serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .corpus import export_csv, import_csv
from .engine import SessionConfig
from .simharness import generate_synthetic, simulate

DEFAULT_DATA_DIR_ENV = "SCREENLOOP_DATA_DIR"
# Matches the topical vocabulary of generate_synthetic corpora.
DEFAULT_QUERY = "topic0000 topic0001 topic0002"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screenloop",
        description="Active-learning assistant for total-recall document screening",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic ground-truth corpus CSV")
    gen.add_argument("--docs", type=int, required=True)
    gen.add_argument("--relevant", type=int, required=True)
    gen.add_argument("--signal", type=float, default=0.6)
    gen.add_argument("--vocab", type=int, default=200)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    sim = sub.add_parser("simulate", help="replay a ground-truth corpus through the loop")
    sim.add_argument("--input", required=True, help="CSV with a yes/no label column")
    sim.add_argument("--target-recall", type=float, default=0.9)
    sim.add_argument("--batch-size", type=int, default=10)
    sim.add_argument("--threshold", type=int, default=30)
    sim.add_argument("--seed", type=int, default=42)
    sim.add_argument("--error-rate", type=float, default=0.0)
    sim.add_argument("--query", default=DEFAULT_QUERY, help="bootstrap keyword query")
    sim.add_argument("--out", required=True, help="report JSON path")

    serve = sub.add_parser("serve", help="run the screening HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument(
        "--data-dir",
        default=None,
        help=f"session storage (default: ${DEFAULT_DATA_DIR_ENV} or ./screenloop-data)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "generate":
        corpus = generate_synthetic(
            n_docs=args.docs,
            n_relevant=args.relevant,
            vocab_size=args.vocab,
            signal=args.signal,
            seed=args.seed,
        )
        rows = export_csv(corpus, args.out)
        print(f"wrote {rows} documents to {args.out}")
        return 0

    if args.command == "simulate":
        corpus = import_csv(args.input).corpus
        config = SessionConfig(
            target_recall=args.target_recall,
            batch_size=args.batch_size,
            strategy_threshold=args.threshold,
            rng_seed=args.seed,
            bootstrap_query=args.query,
        )
        result = simulate(corpus, config, error_rate=args.error_rate)
        Path(args.out).write_text(result.to_json(), encoding="utf-8")
        est = result.estimated_recall
        print(
            f"stopped after {result.stop_screened} labels "
            f"({result.stop_reason}): true recall {result.true_recall:.3f}, "
            f"estimated {'n/a' if est is None else f'{est:.3f}'}, "
            f"cost {result.cost:.3f}; report at {args.out}"
        )
        return 0

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        data_dir = args.data_dir or os.environ.get(
            DEFAULT_DATA_DIR_ENV, "screenloop-data"
        )
        app = create_app(data_dir)
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
