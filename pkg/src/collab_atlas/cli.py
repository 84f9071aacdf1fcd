"""Command line entry point: ``collab-atlas <stage> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .pipeline import STAGES, PipelineError, run_stage

log = logging.getLogger("collab_atlas")

CONFIG_STAGES = [s for s in STAGES if s != "fetch"]


def _fetch(args) -> int:
    from .biblio import parse_query_file, persist_corpus
    from .eutils import ClientConfig, EutilsClient, fetch_corpus

    overrides = {"retries": args.retries}
    if args.rate is not None:
        overrides["rate"] = args.rate
    if args.base_url:
        overrides["base_url"] = args.base_url
    client = EutilsClient(ClientConfig.from_env(**overrides))
    queries = parse_query_file(args.queries)
    corpus = fetch_corpus(queries, client, workers=args.workers)
    persist_corpus(corpus, args.out)
    log.info("wrote %d records for %d authors to %s", len(corpus.records), len(queries), args.out)
    return 0


def _fixture(args) -> int:
    from .fixtures import write_fixture

    cfg = write_fixture(args.out)
    print(cfg)
    return 0


def _stage(args) -> int:
    overrides = {}
    if args.threads is not None:
        overrides["ot.threads"] = args.threads
    if args.seed is not None:
        overrides["graph.seed"] = args.seed
    if args.k is not None:
        overrides["graph.k"] = args.k
    cfg = load_config(args.config, overrides)
    run_stage(args.command, cfg, force=args.force, from_scratch=args.from_scratch)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="collab-atlas", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fetch", help="retrieve abstracts for each author query")
    f.add_argument("--queries", required=True, type=Path, help="CSV author_id,display_name,query")
    f.add_argument("--out", required=True, type=Path, help="corpus JSON to write")
    f.add_argument("--rate", type=float, help="requests per second (default 3, or 10 with a key)")
    f.add_argument("--retries", type=int, default=4)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--base-url", help="E-utilities endpoint (testing)")
    f.set_defaults(func=_fetch)

    x = sub.add_parser("fixture", help="write the synthetic 12-author fixture and its config")
    x.add_argument("--out", required=True, type=Path)
    x.set_defaults(func=_fixture)

    for stage in CONFIG_STAGES:
        s = sub.add_parser(stage, help=f"run the {stage} stage")
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--force", action="store_true", help="proceed despite stale inputs")
        s.add_argument("--from-scratch", action="store_true",
                       help="rerun every stage from process up to this one")
        s.add_argument("--threads", type=int, help="OT worker threads")
        s.add_argument("--seed", type=int, help="graph seed (Louvain and nulls)")
        s.add_argument("--k", type=int, help="nearest neighbours per author")
        s.set_defaults(func=_stage)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, PipelineError) as exc:
        print(f"collab-atlas: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
