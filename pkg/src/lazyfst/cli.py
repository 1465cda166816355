"""Command line front end.

Exit codes: 0 on success, 1 for usage problems, 2 for data or
configuration errors, 3 when an internal invariant check trips.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cache import dump_public_cache
from .errors import InvariantError, LazyFstError
from .harness import (METHODS, build_graphs, decode_config, graph_stats,
                      load_config, precompose_cache, run_bench, run_session,
                      score_report, write_build)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="lazyfst",
                     description="class-based lazy composition toolkit")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method_default="none"):
        p.add_argument("--config", required=True, help="path to desk.json")
        p.add_argument("--method", choices=METHODS, default=method_default)
        p.add_argument("--bfs-depth", type=int, default=None)

    p = sub.add_parser("build", help="build graphs and write artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="artifact directory")

    p = sub.add_parser("precompose", help="fill and dump the shared cache")
    common(p, method_default="bfs")
    p.add_argument("--out", default=None, help="cache dump path")

    p = sub.add_parser("warmup", help="warm-up pre-composition (decode-driven)")
    p.add_argument("--config", required=True)
    p.add_argument("--bfs-depth", type=int, default=None)
    p.add_argument("--out", default=None, help="cache dump path")

    p = sub.add_parser("decode", help="decode one utterance")
    common(p)
    p.add_argument("--user", default=None)
    p.add_argument("--utt", default=None, help="utterance id")

    p = sub.add_parser("bench", help="run the session benchmark")
    common(p)
    p.add_argument("--session-length", type=int, choices=(1, 2, 5), default=5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", default=None, help="write the full report here")

    p = sub.add_parser("score", help="recompute WER for a bench report")
    p.add_argument("--config", required=True)
    p.add_argument("--report", required=True)

    p = sub.add_parser("stats", help="print graph statistics")
    p.add_argument("--config", required=True)
    return parser


def _config(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _dump_cache(cache, cfg, args, method: str) -> str:
    out = args.out
    if out is None:
        out_dir = Path(cfg.get("out_dir", "build"))
        out_dir.mkdir(parents=True, exist_ok=True)
        out = str(out_dir / f"cache_{method}.txt")
    Path(out).write_text(dump_public_cache(cache))
    return out


def cmd_build(args) -> int:
    cfg = _config(args)
    build = build_graphs(cfg)
    out = args.out or cfg.get("out_dir", "build")
    counts = write_build(build, out)
    print(json.dumps(counts, indent=2))
    return 0


def cmd_precompose(args, method: str | None = None) -> int:
    cfg = _config(args)
    build = build_graphs(cfg)
    method = method or args.method
    cache, stats = precompose_cache(build, cfg, method, args.bfs_depth)
    stats["dump"] = _dump_cache(cache, cfg, args, method)
    print(json.dumps(stats, indent=2))
    return 0


def cmd_decode(args) -> int:
    cfg = _config(args)
    build = build_graphs(cfg)
    utt = None
    if args.utt is not None:
        utt = next((u for u in build.utterances if u["id"] == args.utt), None)
        if utt is None:
            raise LazyFstError(f"unknown utterance id {args.utt!r}")
    else:
        user = args.user or build.utterances[0]["user"]
        utt = next(u for u in build.utterances if u["user"] == user)
    cache, _ = precompose_cache(build, cfg, args.method, args.bfs_depth)
    result = run_session(cache, build, cfg, utt["user"], [utt],
                         decode_config(cfg))
    turn = result.turns[0]
    print(json.dumps({"id": utt["id"], "user": utt["user"],
                      "ref_words": utt["words"], "hyp_words": turn["hyp_words"],
                      "cost": turn["cost"], "errors": turn["errors"],
                      "metrics": {"otf": turn["otf"], "public": turn["public"],
                                  "private": turn["private"]}}, indent=2))
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    report = run_bench(cfg, method=args.method,
                       session_length=args.session_length,
                       threads=args.threads, bfs_depth=args.bfs_depth)
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    summary = {k: report[k] for k in ("method", "session_length", "threads",
                                      "totals", "rtf", "bytes_public",
                                      "bytes_private_total",
                                      "marginal_bytes_per_session")}
    print(json.dumps(summary, indent=2))
    return 0


def cmd_score(args) -> int:
    cfg = _config(args)
    build = build_graphs(cfg)
    try:
        report = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise LazyFstError(f"cannot read report {args.report}: {err}") from None
    print(json.dumps(score_report(report, build), indent=2))
    return 0


def cmd_stats(args) -> int:
    cfg = _config(args)
    build = build_graphs(cfg)
    print(json.dumps(graph_stats(build, cfg), indent=2))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else 1
    try:
        if args.command == "build":
            return cmd_build(args)
        if args.command == "precompose":
            return cmd_precompose(args)
        if args.command == "warmup":
            return cmd_precompose(args, method="warmup")
        if args.command == "decode":
            return cmd_decode(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "score":
            return cmd_score(args)
        if args.command == "stats":
            return cmd_stats(args)
        parser.error(f"unknown command {args.command!r}")
    except InvariantError as err:
        print(f"lazyfst: invariant violation: {err}", file=sys.stderr)
        return 3
    except LazyFstError as err:
        print(f"lazyfst: error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
