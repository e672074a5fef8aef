"""Command-line surface: build a snapshot, then query or serve it."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .model import ModelError, NoKnownKeywordsError, UnknownTermError
from .snapshot import build_snapshot, load_snapshot, render_json
from .snapshot import classify_payload, recommend_payload, related_payload

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {number}")
    return number


def _fraction(value: str) -> float:
    number = float(value)
    if not 0.0 <= number <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {number}")
    return number


def _keyword_list(raw: str) -> list[str]:
    keywords = [part for part in raw.split(",") if part.strip()]
    if not keywords:
        raise argparse.ArgumentTypeError("expected a comma-separated keyword list")
    return keywords


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="searchkin",
        description="Mine search logs for related terms and augment recommendations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a snapshot from logs and a corpus")
    p_build.add_argument("--logs", required=True, help="search log file (jsonl or delimited)")
    p_build.add_argument("--corpus", required=True, help="document corpus (jsonl)")
    p_build.add_argument("--config", default=None, help="engine config JSON (optional)")
    p_build.add_argument("--out", required=True, help="snapshot output directory")

    p_related = sub.add_parser("related", help="list semantically related terms")
    p_related.add_argument("--snapshot", required=True)
    p_related.add_argument("--term", required=True)
    p_related.add_argument("--top-n", type=_positive_int, default=None)
    p_related.add_argument("--min-score", type=_fraction, default=None)
    p_related.add_argument("--filter", action="store_true", help="apply retrieval-overlap filtering")
    p_related.add_argument("--min-intersection", type=int, default=None)
    p_related.add_argument("--min-jaccard", type=float, default=None)
    p_related.add_argument("--filter-report", default=None, help="write per-candidate JSONL report")

    p_classify = sub.add_parser("classify", help="score user classes for keywords")
    p_classify.add_argument("--snapshot", required=True)
    p_classify.add_argument("--keywords", required=True, type=_keyword_list)
    p_classify.add_argument("--beta", type=float, default=None, help="smoothing override")

    p_recommend = sub.add_parser("recommend", help="augmented recommendations for keywords")
    p_recommend.add_argument("--snapshot", required=True)
    p_recommend.add_argument("--keywords", required=True, type=_keyword_list)
    p_recommend.add_argument("--alpha", type=float, default=None, help="decision threshold override")

    p_serve = sub.add_parser("serve", help="serve a snapshot over HTTP")
    p_serve.add_argument("--snapshot", required=True)
    p_serve.add_argument("--bind", default="127.0.0.1:8080", help="HOST:PORT")
    return parser


def _cmd_build(args) -> int:
    try:
        _, report = build_snapshot(args.logs, args.corpus, args.out, args.config)
    except (FileNotFoundError, ValueError, ModelError, OSError) as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(render_json(report.to_dict()))
    return EXIT_OK


def _load(args):
    return load_snapshot(args.snapshot)


def _cmd_related(args) -> int:
    snapshot = _load(args)
    try:
        payload = related_payload(
            snapshot,
            args.term,
            top_n=args.top_n,
            min_score=args.min_score,
            use_filter=args.filter,
            min_intersection=args.min_intersection,
            min_jaccard=args.min_jaccard,
            report_path=args.filter_report,
        )
    except UnknownTermError:
        sys.stdout.write(render_json({"error": "unknown term", "term": args.term}))
        return EXIT_USAGE
    sys.stdout.write(render_json(payload))
    return EXIT_OK


def _cmd_classify(args) -> int:
    snapshot = _load(args)
    try:
        payload = classify_payload(snapshot, args.keywords, beta=args.beta)
    except NoKnownKeywordsError:
        sys.stdout.write(render_json({"error": "no known keywords", "keywords": args.keywords}))
        return EXIT_USAGE
    except ValueError as exc:
        print(f"classify failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(render_json(payload))
    return EXIT_OK


def _cmd_recommend(args) -> int:
    snapshot = _load(args)
    overrides = {"alpha": args.alpha} if args.alpha is not None else None
    try:
        payload = recommend_payload(snapshot, args.keywords, overrides=overrides)
    except ValueError as exc:
        print(f"recommend failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(render_json(payload))
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import serve_snapshot

    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        print(f"invalid bind address: {args.bind}", file=sys.stderr)
        return EXIT_USAGE
    snapshot = _load(args)
    serve_snapshot(snapshot, host, int(port_text))
    return EXIT_OK


_COMMANDS = {
    "build": _cmd_build,
    "related": _cmd_related,
    "classify": _cmd_classify,
    "recommend": _cmd_recommend,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    if args.command != "build":
        try:
            return handler(args)
        except FileNotFoundError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_ERROR
        except (ModelError, ValueError, json.JSONDecodeError) as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_ERROR
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
