"""Command-line front end: run one scenario, a suite, or render tables.

Exit status is 0 iff every requested run finished (threshold exceedances
are reported in the table, not the exit code).
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

from .report import (
    collect_metrics,
    format_table,
    metrics_row,
    run_suite,
    write_run_results,
    write_table,
)
from .scenario import load_scenario
from .sim import run_scenario


def _cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    log, report = run_scenario(scn)
    write_run_results(args.out, scn, log, report)
    print(format_table([metrics_row(scn.name, report)]), end="")
    if log.aborted:
        print(f"run aborted: {log.abort_reason}", file=sys.stderr)
        return 1
    return 0


def _cmd_suite(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.dir, "*.ini")))
    if not paths:
        print(f"no scenario files in {args.dir}", file=sys.stderr)
        return 2
    results = run_suite(paths, out_dir=args.out)
    with open(os.path.join(args.out, "table.txt")) as fh:
        print(fh.read(), end="")
    failed = [r.name for r in results if r.aborted]
    if failed:
        print("aborted scenarios: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def _cmd_table(args) -> int:
    rows = collect_metrics(args.results_dir)
    write_table(args.results_dir, rows)
    print(format_table(rows), end="")
    return 1 if any(r.get("aborted") for r in rows) else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ftmpc",
        description="Fault-tolerant trajectory-tracking MPC simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario file")
    p_run.add_argument("--scenario", required=True,
                       help="path to a scenario INI file")
    p_run.add_argument("--out", required=True,
                       help="directory for log.csv / metrics.csv / config.echo")
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run every *.ini in a directory")
    p_suite.add_argument("--dir", required=True,
                         help="directory holding scenario INI files")
    p_suite.add_argument("--out", required=True,
                         help="results root (one subdirectory per scenario)")
    p_suite.set_defaults(func=_cmd_suite)

    p_table = sub.add_parser("table",
                             help="render the metrics table from results")
    p_table.add_argument("--in", dest="results_dir", required=True,
                         help="results directory holding metrics.csv files")
    p_table.set_defaults(func=_cmd_table)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
