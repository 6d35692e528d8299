"""Command-line entry point.

Subcommands::

    cpg run --config NAME_OR_PATH [--seed S] [--out DIR] [--override k=v ...]
    cpg verify [--seed S]
    cpg plot --config NAME_OR_PATH --out DIR
    cpg list-configs
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..validation import ValidationError
from .config import list_bundled_configs, load_config
from .plots import emit_plots
from .runner import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpg",
        description="Constrained policy-gradient experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a config and write CSVs and plots")
    run_p.add_argument("--config", required=True, help="bundled config name or YAML path")
    run_p.add_argument("--seed", type=int, default=None, help="replace the config's seed list")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--override", action="append", default=[], metavar="PATH=VALUE",
                       help="dotted-path config override, repeatable")

    verify_p = sub.add_parser("verify", help="run the oracle cross-check suite")
    verify_p.add_argument("--seed", type=int, default=0)

    plot_p = sub.add_parser("plot", help="regenerate plots from existing CSVs")
    plot_p.add_argument("--config", required=True)
    plot_p.add_argument("--out", required=True, help="directory holding the run CSVs")
    plot_p.add_argument("--override", action="append", default=[], metavar="PATH=VALUE")

    sub.add_parser("list-configs", help="enumerate bundled configs")
    return parser


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "list-configs":
            for name, description in list_bundled_configs():
                print(f"{name:32s} {description}")
            return 0

        if args.command == "verify":
            from .verify import run_verification

            return 0 if run_verification(args.seed) else 1

        config = load_config(args.config, overrides=args.override)
        if args.command == "plot":
            for path in emit_plots(config, Path(args.out)):
                print(f"wrote {path}")
            return 0

        if args.seed is not None:
            config.seeds = [args.seed]
        out_dir = Path(args.out) if args.out else config.resolved_output_dir()
        run_experiment(config, out_dir)
        for path in emit_plots(config, out_dir):
            print(f"wrote {path}")
        print(f"run artifacts under {out_dir}")
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli())
