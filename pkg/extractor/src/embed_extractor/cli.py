"""CLI for producing embedding tables: ``embed-extract cls | api``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .api_extract import DEFAULT_ENDPOINT, extract_api_embeddings
from .cls_extract import extract_cls_embeddings
from .errors import ExtractorError
from .phrases import PhraseTemplates, Vocabulary, render_phrases
from .writer import atomic_write

logger = logging.getLogger(__name__)


def _load_phrases(vocab_path: str, absent_template: str):
    path = Path(vocab_path)
    if not path.is_file():
        raise ExtractorError(f"vocabulary file not found: {vocab_path}")
    vocab = Vocabulary.from_json(path.read_text(encoding="utf-8"))
    templates = PhraseTemplates(absent=absent_template)
    return render_phrases(vocab, templates)


def cmd_cls(args: argparse.Namespace) -> int:
    phrases = _load_phrases(args.vocab, args.absent_template)
    content = extract_cls_embeddings(args.model, phrases, batch_size=args.batch_size)
    atomic_write(args.out, content)
    logger.info("wrote %d phrase embeddings to %s", len(phrases), args.out)
    return 0


def cmd_api(args: argparse.Namespace) -> int:
    phrases = _load_phrases(args.vocab, args.absent_template)
    dimension = extract_api_embeddings(
        args.model,
        phrases,
        credentials=None,  # read from the environment
        out_path=args.out,
        endpoint=args.endpoint,
        batch_size=args.batch_size,
        expected_dimension=args.dimension,
    )
    logger.info("wrote %d embeddings (dimension %d) to %s", len(phrases), dimension, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-extract",
        description="Produce concept-embedding tables in the shared file format",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--model", required=True, help="model identifier")
        p.add_argument("--vocab", required=True, help="vocabulary JSON path")
        p.add_argument("--out", required=True, help="output table path")
        p.add_argument(
            "--absent-template",
            default="no {concept}",
            help="negation phrasing for absent findings",
        )

    p = sub.add_parser("cls", help="[CLS]-token vectors from a transformer checkpoint")
    common(p)
    p.add_argument("--batch-size", type=int, default=16)
    p.set_defaults(func=cmd_cls)

    p = sub.add_parser("api", help="vectors from a hosted embeddings API")
    common(p)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--endpoint", default=DEFAULT_ENDPOINT)
    p.add_argument("--dimension", type=int, help="expected embedding size override")
    p.set_defaults(func=cmd_api)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
