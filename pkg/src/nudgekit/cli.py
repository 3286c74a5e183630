"""Command-line entry points: scenario replay and the live gateway."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import NudgeKitError
from .scenario_runner import compare_golden_file, load_script, run

EXIT_OK = 0
EXIT_GOLDEN_MISMATCH = 1
EXIT_SCRIPT_ERROR = 2


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        script = load_script(args.script)
        result = run(script)
    except NudgeKitError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return EXIT_SCRIPT_ERROR
    if args.out:
        Path(args.out).write_text(result.log_text(), encoding="utf-8")
    if args.metrics:
        Path(args.metrics).write_text(
            json.dumps(result.metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    print(
        f"{script.name}: {len(result.log)} events, "
        f"{result.metrics['nudge_count']} nudges, "
        f"{result.metrics['frames_kept']}/{result.metrics['frames_pushed']} frames kept"
    )
    if args.golden:
        try:
            diff = compare_golden_file(result, args.golden)
        except NudgeKitError as exc:
            print(f"script error: {exc}", file=sys.stderr)
            return EXIT_SCRIPT_ERROR
        if not diff.empty:
            print(diff.report(), file=sys.stderr)
            return EXIT_GOLDEN_MISMATCH
        print("golden: match")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    print(f"gateway listening on ws://{args.host}:{args.port}/ws")
    serve(host=args.host, port=args.port, static_dir=args.static)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nudgekit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="replay a scenario script deterministically")
    p_run.add_argument("script", help="path to the scenario JSON document")
    p_run.add_argument("--golden", help="golden session log (jsonl) to compare against")
    p_run.add_argument("--out", help="write the session log (jsonl) here")
    p_run.add_argument("--metrics", help="write run metrics (json) here")
    p_run.set_defaults(func=_cmd_run)

    p_serve = sub.add_parser("serve", help="run the live websocket gateway")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--static", help="serve this directory (operator console build) at /")
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
