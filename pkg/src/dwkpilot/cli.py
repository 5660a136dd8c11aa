"""Command line entry point: ``dwkpilot <kind> --config <path> [--out <dir>]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .scenario import KINDS, ConfigParseError, ConfigRangeError, parse_scenario, run_scenario

log = logging.getLogger("dwkpilot")

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_RANGE, EXIT_RUNTIME = 0, 1, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dwkpilot", description="Run a pilot-wave scenario and write CSV/JSON artifacts.")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="JSON scenario file")
    p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = parse_scenario(args.config, kind=args.kind)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigRangeError as exc:
        print(f"config range error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    try:
        report = run_scenario(cfg, args.out)
    except Exception as exc:  # numerical or I/O failure inside a pipeline
        print(f"scenario {cfg.name!r} ({cfg.kind}) failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (tol {c.tolerance:.1e})")
    print(f"wall time {report.wall_time:.1f} s; artifacts: {', '.join(str(a) for a in report.artifacts)}")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
