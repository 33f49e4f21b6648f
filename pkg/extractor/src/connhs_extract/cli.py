"""Command-line adapter: raw-text JSON Lines in, embedding bundle out."""

from __future__ import annotations

import argparse
import sys

from .encoders import load_encoder
from .extract import build_bundle, load_raw_corpus


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="connhs-extract", description=__doc__)
    parser.add_argument("--in", dest="in_path", required=True, help="raw corpus JSON Lines")
    parser.add_argument("--out", dest="out_path", required=True, help="bundle output path")
    parser.add_argument("--encoder", default="mock", help="'mock' or 'module:attribute'")
    parser.add_argument("--dim", type=int, default=32, help="mock encoder output dim")
    parser.add_argument("--keywords", type=int, default=10, help="keywords per document")
    parser.add_argument(
        "--drop-pattern",
        action="append",
        default=[],
        help="regex removed from text before encoding (repeatable)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        docs = load_raw_corpus(args.in_path)
        encoder = load_encoder(args.encoder, dim=args.dim)
        count = build_bundle(docs, encoder, args.out_path, k=args.keywords, drop_patterns=args.drop_pattern)
    except (ValueError, TypeError, OSError, ImportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {count} records to {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
