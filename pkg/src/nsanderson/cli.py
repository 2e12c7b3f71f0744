"""Command line entry point: ``nsanderson <subcommand> --config FILE``."""

from __future__ import annotations

import argparse
import sys

from .ensembles import ConfigError
from .runner import SUBCOMMANDS, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsanderson",
        description="Experiment runner for the non-stationary Anderson model lab.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS,
                        help="which experiment to run")
    parser.add_argument("--config", required=True, help="experiment JSON file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed (64-bit)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker hint; results are invariant to it")
    parser.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args.subcommand, args.config, out_dir=args.out,
                   seed=args.seed, threads=max(args.threads, 1))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
