"""Operator entry point.

Subcommands:
    synth      generate a synthetic corpus directory
    build      run the artifact pipeline (filter, embed, index, graph,
               layout, recommendations) and write a manifest
    serve      start the HTTP API over a built artifact directory
    recommend  print a precomputed recommendation table
    path       print the shortest co-authorship path between two authors
    bench      measure /nodes and /search latency percentiles

Exit codes: 0 ok, 1 config/usage error, 2 data-load error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .build import run_build, verify_artifacts
from .config import ConfigError, load_config
from .errors import LoadError, NotFoundError, TalentKGError, ValidationError
from .synth import SynthSpec, generate_corpus

log = logging.getLogger("talentkg")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="talentkg", description=__doc__)
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument("--log-level", default="info", choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("out_dir")
    p.add_argument("--authors", type=int, default=100)
    p.add_argument("--papers", type=int, default=250)
    p.add_argument("--datasets", type=int, default=12)
    p.add_argument("--bio-entities", type=int, default=0)
    p.add_argument("--topics", type=int, default=8)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--coverage", type=float, default=1.0,
                   help="fraction of authors guaranteed to pass the activity filter")

    p = sub.add_parser("build", help="build serving artifacts from a corpus")
    p.add_argument("corpus_dir")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--method", choices=["pca", "neighbor_embedding"], default=None)
    p.add_argument("--skip-recs", action="store_true")
    p.add_argument("--pseudo-embed", action="store_true",
                   help="derive stand-in paper embeddings from text when embeddings.f32 is absent")

    p = sub.add_parser("serve", help="serve a built artifact directory")
    p.add_argument("artifact_dir")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--mock-llm", action="store_true", help="force the deterministic mock backbone")
    p.add_argument("--static", default=None, metavar="DIR",
                   help="also serve a static frontend directory at /")

    p = sub.add_parser("recommend", help="print a recommendation table")
    p.add_argument("artifact_dir")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--author")
    group.add_argument("--dataset")
    p.add_argument("--k", type=int, default=None)

    p = sub.add_parser("path", help="shortest co-authorship path")
    p.add_argument("artifact_dir")
    p.add_argument("--from", dest="from_id", required=True)
    p.add_argument("--to", dest="to_id", required=True)

    p = sub.add_parser("bench", help="latency percentiles for /nodes and /search")
    p.add_argument("artifact_dir")
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=2000)

    return parser


def cmd_synth(args, config) -> int:
    spec = SynthSpec(
        n_authors=args.authors,
        n_papers=args.papers,
        n_datasets=args.datasets,
        n_bio_entities=args.bio_entities,
        n_topics=args.topics,
        seed=args.seed,
        embed_seed=config.embed_seed,
        coverage=args.coverage,
    )
    summary = generate_corpus(spec, args.out_dir)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_build(args, config) -> int:
    manifest = run_build(
        args.corpus_dir,
        args.out_dir,
        config=config,
        seed=args.seed,
        method=args.method,
        skip_recs=args.skip_recs,
        use_pseudo_embeddings=args.pseudo_embed,
    )
    print(json.dumps({"version": manifest.version, "stats": manifest.stats}))
    return EXIT_OK


def cmd_serve(args, config) -> int:
    import uvicorn

    from .agents.pipeline import JustificationCache
    from .server.app import create_app
    from .server.sessions import SessionStore
    from .server.snapshot import load_snapshot

    artifact_dir = Path(args.artifact_dir)
    snapshot = load_snapshot(artifact_dir, verify=True)
    app = create_app(
        snapshot,
        config=config,
        mock_llm=args.mock_llm,
        session_store=SessionStore(artifact_dir / "sessions.db"),
        justify_cache=JustificationCache(artifact_dir / "justify_cache.json"),
    )
    if args.static:
        from fastapi.staticfiles import StaticFiles

        static_dir = Path(args.static)
        if not static_dir.is_dir():
            raise LoadError(f"static directory not found: {static_dir}")
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")
    host = args.host or config.host
    port = args.port if args.port is not None else config.port
    log.info("serving snapshot %s on %s:%d", snapshot.version, host, port)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def cmd_recommend(args, config) -> int:
    from .recommend import load_recommendations

    artifact_dir = Path(args.artifact_dir)
    verify_artifacts(artifact_dir)
    recs_path = artifact_dir / "recommendations.jsonl"
    if not recs_path.exists():
        raise LoadError("recommendations.jsonl not found (build ran with --skip-recs?)")
    lists = load_recommendations(recs_path)
    query_id = args.author or args.dataset
    entry = lists.get(query_id)
    if entry is None:
        raise NotFoundError(f"no recommendations for id: {query_id}")
    kind, recs = entry
    expected_kind = "collaborators" if args.author else "dataset_users"
    if kind != expected_kind:
        raise NotFoundError(f"{query_id} has '{kind}' recommendations, not '{expected_kind}'")
    k = args.k or len(recs)
    print(f"# {kind} for {query_id}")
    print(f"{'rank':>4}  {'candidate':<16} {'score':>10}")
    for rec in recs[:k]:
        print(f"{rec.rank:>4}  {rec.candidate_id:<16} {rec.score:>10.6f}")
    return EXIT_OK


def cmd_path(args, config) -> int:
    from .corpus import load_corpus
    from .graphnet import load_graph, shortest_path

    artifact_dir = Path(args.artifact_dir)
    verify_artifacts(artifact_dir)
    corpus = load_corpus(artifact_dir)
    graph = load_graph(artifact_dir / "coauthor_graph.jsonl", node_ids=sorted(corpus.authors))
    path = shortest_path(graph, args.from_id, args.to_id)
    if path is None:
        print("no path")
    else:
        names = " -> ".join(f"{a} ({corpus.authors[a].name})" for a in path)
        print(names)
        print(f"distance: {len(path) - 1}")
    return EXIT_OK


def cmd_bench(args, config) -> int:
    from .server.app import create_app
    from .server.bench import run_bench
    from .server.snapshot import load_snapshot

    snapshot = load_snapshot(args.artifact_dir, verify=True)
    app = create_app(snapshot, config=config, mock_llm=True)
    report = run_bench(app, n_queries=args.queries, seed=args.seed, limit=args.limit)
    print(json.dumps(report, indent=2))
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth,
    "build": cmd_build,
    "serve": cmd_serve,
    "recommend": cmd_recommend,
    "path": cmd_path,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LoadError, ValidationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TalentKGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
