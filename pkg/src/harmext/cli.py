"""Command-line entry point.

``harmext {run,analyze,hilbert,compat,extend} --config job.json [--out DIR] [--points points.csv]``

``run`` executes the outputs listed in the config; the other commands run
their own stage (``extend`` also runs the compatibility gate on closed
curves).  Exit codes: 0 success, 1 internal error, 2 extension refused
because the data is not compatible, 3 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigError, StageError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_NOT_ANALYTIC = 2
EXIT_CONFIG = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harmext", description="Harmonic field extension from boundary data.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "analyze", "hilbert", "compat", "extend"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="job file (.json or .toml)")
        p.add_argument("--out", default=None, help="output directory (default: config out_dir or cwd)")
        p.add_argument("--points", default=None, help="CSV with header x,y of evaluation points")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .report import run

    try:
        cfg = load_config(args.config, args.points)
        if args.command != "run":
            cfg = cfg.with_outputs([args.command])
        report = run(cfg, args.out)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as e:
        print(f"stage {e.stage} failed: {e.cause}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    for w in report.warnings:
        print(f"warning [{w['stage']}]: {w['message']}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
