"""Command line entry point.

Subcommands: run, check, sweep; each takes a TOML/JSON config path plus
optional dotted key=value overrides.  Exit codes: 0 success, 1 invariant
failure, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback

from .basis import BasisError
from .config import ConfigError, load_config
from .evolve import SolveError
from .operators import CoercivityError
from .quadrature import IntegrationError
from .scenarios import AdmissibilityError

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (SolveError, CoercivityError, IntegrationError,
                    BasisError, AdmissibilityError, FloatingPointError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fenefp",
        description="Weighted spectral solver and invariant checker for the "
                    "finitely extensible dumbbell Fokker-Planck problem.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("run", "execute a scenario and write report artifacts"),
            ("check", "run the full invariant suite"),
            ("sweep", "run the b-threshold sweep")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a TOML or JSON config file")
        p.add_argument("overrides", nargs="*",
                       help="dotted key=value overrides, e.g. model.b=3.5")
    return parser


def _load(args) -> "RunConfig":
    cfg = load_config(args.config, list(args.overrides))
    if args.command == "check":
        cfg.scenario = "check"
    elif args.command == "sweep":
        cfg.scenario = "sweep"
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .plots import render_all
    from .runner import run_scenario

    try:
        report, failures = run_scenario(cfg)
        report.validate_finite()
        outdir = cfg.output_dir()
        written = report.write(outdir)
        if cfg.plots:
            written.extend(render_all(report, outdir))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        traceback.print_exc()
        return EXIT_NUMERICAL

    for result in getattr(report, "extras", []) or []:
        print(result.line())
    for key, value in sorted(report.scalars.items()):
        if isinstance(value, float):
            print(f"{key} = {value:.6e}")
        else:
            print(f"{key} = {value}")
    for path in written:
        print(f"wrote {path}")

    if failures:
        for item in failures:
            print(f"invariant failure: {item}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
