"""Command-line entry point.

    wgarray run --config FILE [--set key=value ...] [--out DIR]
                 [--seed N] [--quiet]
    wgarray list-experiments
    wgarray validate --config FILE

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
The WGARRAY_WORKERS environment variable sets the default worker count;
the workers config key (or --set workers=N) overrides it.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, apply_overrides, parse_config_file, validate
from .experiments import EXPERIMENTS, run
from .params import NonFiniteError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgarray",
        description="entangled-light simulations in a pumped nonlinear "
                    "waveguide array",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True, help="key = value config file")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (wins over the file)")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the run seed")
    p_run.add_argument("--quiet", action="store_true",
                       help="suppress progress output")

    sub.add_parser("list-experiments", help="list available experiments")

    p_val = sub.add_parser("validate", help="validate a config file and echo it")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-experiments":
        for name, (_, desc) in EXPERIMENTS.items():
            print(f"{name:20s} {desc}")
        return EXIT_OK

    try:
        cfg = parse_config_file(args.config)
        apply_overrides(cfg, args.set)
        if getattr(args, "seed", None) is not None:
            cfg.seed = args.seed
        validate(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
        return EXIT_OK

    try:
        written = run(cfg, args.out, quiet=args.quiet)
    except NonFiniteError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not args.quiet:
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
