"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .bayesopt import GPError
from .hydro import SimulationError
from .metrics import MetricsError

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

_HELP = {
    "mesh": "build a feather mesh and write it as JSON",
    "simulate": "simulate one feather under one controller",
    "sweep": "sweep feather widths or lengths over the controller grid",
    "optimize": "search stroke timings for the highest and lowest thrust ratio",
    "validate": "evaluate best, baseline and worst controllers on each design",
    "swim": "run the rail robot with one or more controllers",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feathersim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in harness.COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--output-dir", default=None, help="override the config output_dir")
        p.add_argument("--workers", type=int, default=None, help="worker processes for sweeps")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = harness.load_config(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise harness.ConfigError("--workers must be >= 1")
            config["workers"] = args.workers
        if args.seed is not None and args.seed < 0:
            raise harness.ConfigError("--seed must be >= 0")
        result = harness.run(args.command, config, seed=args.seed, output_dir=args.output_dir,
                             config_dir=Path(args.config).resolve().parent)
    except harness.ConfigError as exc:
        print(f"feathersim {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, MetricsError, GPError, OSError) as exc:
        print(f"feathersim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = Path(config.get("output_dir", "out") if args.output_dir is None else args.output_dir)
    print(f"wrote {out / config['name']}")
    if args.command in ("simulate", "swim", "optimize"):
        print(json.dumps(result, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
