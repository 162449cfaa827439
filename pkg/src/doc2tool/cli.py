"""Command line entry point.

Exit codes: 0 success (including runs with failed tools, which are data),
2 configuration error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .errors import Doc2ToolError
from .pipeline import (
    PipelineConfig,
    run_all,
    stage_compile,
    stage_extract,
    stage_export,
    stage_infer,
    stage_refine,
    stage_report,
    stage_serve,
    stage_validate,
)

STAGES = {
    "extract": stage_extract,
    "compile": stage_compile,
    "validate": stage_validate,
    "infer": stage_infer,
    "refine": stage_refine,
    "export": stage_export,
    "serve": stage_serve,
    "report": stage_report,
    "run": run_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doc2tool",
        description="Turn REST API documentation into validated executable tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        cmd = sub.add_parser(name, help=f"run the {name} stage")
        _add_flags(cmd)
    return parser


def _add_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", help="JSON config file; flags override its values")
    cmd.add_argument("--input", help="documentation file or directory")
    cmd.add_argument("--out", help="artifact directory (default: artifacts)")
    cmd.add_argument("--jobs", type=int, help="worker pool size")
    cmd.add_argument(
        "--allow-methods",
        help="comma separated HTTP method allow list (default: GET)",
    )
    cmd.add_argument("--max-rounds", type=int, help="refinement round budget")
    cmd.add_argument("--timeout-secs", type=float, help="per-request timeout")
    cmd.add_argument(
        "--llm-backend",
        help='completion backend: "live" or "scripted:<fixtures dir>"',
    )
    cmd.add_argument("--embedding-backend", help='"hashing" or "live"')
    cmd.add_argument("--kb", help="knowledge base jsonl path")
    cmd.add_argument("--mode", choices=["direct", "targeted", "both"], help="compile mode")
    cmd.add_argument("--seed", type=int, help="seed for all randomness")
    cmd.add_argument("--bind", help="serve address host:port")


_FLAG_FIELDS = {
    "input": "input",
    "out": "out",
    "jobs": "jobs",
    "allow_methods": "allow_methods",
    "max_rounds": "max_rounds",
    "timeout_secs": "timeout_secs",
    "llm_backend": "llm_backend",
    "embedding_backend": "embedding_backend",
    "kb": "kb",
    "mode": "mode",
    "seed": "seed",
    "bind": "bind",
}


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge defaults, config file, and flags (flags win)."""
    values: dict[str, Any] = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise Doc2ToolError(f"config file not found: {args.config}")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise Doc2ToolError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise Doc2ToolError("config file must hold a JSON object")
        values.update(loaded)

    for flag, fieldname in _FLAG_FIELDS.items():
        flag_value = getattr(args, flag, None)
        if flag_value is not None:
            values[fieldname] = flag_value

    if isinstance(values.get("allow_methods"), str):
        values["allow_methods"] = tuple(
            m.strip().upper() for m in values["allow_methods"].split(",") if m.strip()
        )
    elif isinstance(values.get("allow_methods"), list):
        values["allow_methods"] = tuple(values["allow_methods"])

    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise Doc2ToolError(f"unknown config keys: {sorted(unknown)}")
    return PipelineConfig(**values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes.
        return 2 if exc.code else 0

    try:
        cfg = resolve_config(args)
    except (Doc2ToolError, TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    stage = STAGES[args.command]
    try:
        stage(cfg)
    except Doc2ToolError as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
