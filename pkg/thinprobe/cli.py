#!/usr/bin/env python3
"""
thinprobe command line.

Exit codes: 0 when every check passes, 2 when a check failed, 1 for
configuration or runtime errors.
"""

import argparse
import logging
import sys
from pathlib import Path

from . import log
from .config import get_settings, load_settings, set_settings
from .errors import CheckFailed, ThinProbeError
from .experiments import run_experiment, run_selfcheck
from .report import format_summary, summarize, write_run, write_summary
from .scenario import Scenario, load_scenario
from .version import get_version

logger = logging.getLogger("thinprobe.cli")


def _print_result(result):
    print(f"\n{log.BANNER}")
    print(f"{result.experiment}: {result.scenario}")
    print(f"{log.BANNER}")
    for check in result.checks:
        mark = "[X]" if check.verdict == "FAIL" else "[OK]"
        measured = "-" if check.measured is None else f"{check.measured:.4g}"
        print(f"  {mark} {check.name}: {measured} ({check.verdict})")
    print(f"{log.BANNER}\n")


def _finish(passed, what):
    if not passed:
        raise CheckFailed(f"{what}: at least one check failed")
    log.ok(logger, "%s: all checks passed", what)
    return 0


def cmd_selfcheck(args):
    """Built-in suite: CGO exactness, Green formula, frames, exponents."""
    result = run_selfcheck()
    _print_result(result)
    if args.output:
        scenario = Scenario.from_dict({"name": "selfcheck", "experiment": {"type": "selfcheck"}})
        write_run(result, scenario, args.output)
    return _finish(result.passed, "selfcheck")


def cmd_run(args):
    scenario = load_scenario(args.file)
    overrides = {
        key: value
        for key, value in (
            ("eps", args.eps_override),
            ("refine", args.quad_refine),
            ("seed", args.seed),
            ("output", args.output),
            ("jobs", args.jobs),
        )
        if value is not None
    }
    if overrides:
        scenario = scenario.with_overrides(**overrides)
    if scenario.settings:
        set_settings(get_settings().updated(**scenario.settings))
    result = run_experiment(scenario, dump_fields=args.dump_fields)
    directory = write_run(result, scenario, overrides={k: str(v) for k, v in overrides.items()})
    _print_result(result)
    print(f"Results: {directory}")
    return _finish(result.passed, scenario.name)


def cmd_report(args):
    summary = summarize([Path(d) for d in args.dirs])
    print(f"\n{log.BANNER}")
    print("Summary")
    print(f"{log.BANNER}")
    print(format_summary(summary))
    print(f"{log.BANNER}\n")
    if args.output:
        write_summary(summary, args.output)
        print(f"Summary written to {args.output}")
    return _finish(summary.passed, "report")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thinprobe",
        description="Thin-domain CGO probe lab: identities, scaling sweeps and stability checks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  thinprobe selfcheck                                   # built-in numerical checks
  thinprobe run scenarios/identity-2d.yaml              # one scenario
  thinprobe run scenarios/sweep-I3.yaml --jobs 4        # eps points in parallel
  thinprobe run scenarios/sweep-I3.yaml --eps-override 0.2 0.1 0.05 0.025
  thinprobe report runs/identity-2d runs/sweep-I3       # merged summary table
  thinprobe -v run scenarios/solve-mms.yaml --dump-fields
        """,
    )

    # Global options
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    parser.add_argument("--settings", metavar="FILE", help="Settings file (default: ./thinprobe.yaml if present)")
    parser.add_argument("--version", action="version", version=f"thinprobe {get_version()}")

    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    selfcheck_parser = subparsers.add_parser("selfcheck", help="Run the built-in check suite")
    selfcheck_parser.add_argument("--output", metavar="DIR", help="Also write a run directory")

    run_parser = subparsers.add_parser("run", help="Run a scenario file")
    run_parser.add_argument("file", help="Scenario file (.yaml or .toml)")
    run_parser.add_argument("--eps-override", nargs="+", type=float, metavar="E",
                            help="Replace the scenario eps (one value) or eps list")
    run_parser.add_argument("--quad-refine", type=int, metavar="K",
                            help="Refine every quadrature axis K times")
    run_parser.add_argument("--dump-fields", action="store_true",
                            help="Write solver fields as field_*.csv")
    run_parser.add_argument("--seed", type=int, metavar="N", help="Override the scenario seed")
    run_parser.add_argument("--jobs", type=int, metavar="N", help="Parallel eps points (joblib n_jobs)")
    run_parser.add_argument("--output", metavar="DIR", help="Run directory (default from the scenario)")

    report_parser = subparsers.add_parser("report", help="Merge run directories into one summary")
    report_parser.add_argument("dirs", nargs="+", metavar="DIR", help="Run directories")
    report_parser.add_argument("--output", metavar="DIR", help="Write summary.txt and summary.json here")

    return parser


COMMANDS = {"selfcheck": cmd_selfcheck, "run": cmd_run, "report": cmd_report}


def main(argv=None):
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    log.configure(verbose=args.verbose)

    if args.command is None:
        parser.print_help()
        return 0

    try:
        set_settings(load_settings(args.settings))
        return COMMANDS[args.command](args)
    except CheckFailed as e:
        log.fail(logger, "%s", e)
        return e.exit_code
    except ThinProbeError as e:
        logger.error("%s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
