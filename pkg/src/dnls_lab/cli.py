"""Command-line entry point: ``dnls-lab <subcommand> --config path [--out dir]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiments import KINDS, UTILITY_KINDS, ExperimentConfig, run
from .solver import SolverInstabilityError

SUBCOMMANDS = UTILITY_KINDS + KINDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dnls-lab",
                                     description="Derivative NLS experiments on rescaled tori.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory for report.json and CSVs")
        p.add_argument("--no-snapshots", action="store_true", help="skip per-snapshot CSV export")
        p.add_argument("--workers", type=int, default=None,
                       help="threads for per-snapshot diagnostics (overrides config)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        kind = raw.setdefault("kind", args.command)
        if kind != args.command and args.command in KINDS:
            raise ValueError(f"config kind {kind!r} does not match subcommand {args.command!r}")
        raw["kind"] = args.command
        if args.workers is not None:
            raw["workers"] = args.workers
        cfg = ExperimentConfig.from_dict(raw)
        report = run(cfg)
    except (OSError, ValueError, TypeError, SolverInstabilityError) as exc:
        json.dump({"pass": False, "failures": [{"name": "error", "detail": str(exc)}]},
                  sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 2

    if args.out:
        report.write(args.out, snapshots=not args.no_snapshots)
    summary = report.to_dict()["summary"]
    json.dump({"kind": report.kind, "summary": summary, "failures": report.failures},
              sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
