"""Result files and the metrics table.

Every run writes three files into its results directory: ``log.csv``
(per-sample time series), ``metrics.csv`` (one-row summary), and
``config.echo`` (the complete effective configuration as INI text).
A suite adds ``table.txt`` / ``table.csv`` with one row per scenario;
metric cells that violate their threshold carry a trailing ``*``.
"""

from __future__ import annotations

import csv
import math
import os
import traceback
from dataclasses import dataclass
from typing import Optional

from .scenario import Scenario, echo_config, load_scenario
from .sim import MetricsReport, RunLog, run_scenario

_METRIC_FIELDS = [
    ("eps_t_max", "m"), ("eps_t_avg", "m"), ("eps_t_end", "m"),
    ("eps_n_max", "m"), ("eps_n_avg", "m"), ("eps_n_end", "m"),
    ("eps_psi_max", "deg"), ("eps_psi_avg", "deg"), ("eps_psi_end", "deg"),
    ("mu_avg", "-"), ("util_peak", "-"),
]
_FLAG_FIELDS = ["ok_eps_t", "ok_eps_n", "ok_eps_psi"]


def _metric_value(report: MetricsReport, field: str, unit: str) -> float:
    val = getattr(report, field)
    return math.degrees(val) if unit == "deg" else val


def metrics_row(name: str, report: MetricsReport) -> dict:
    """Flatten a report into the metrics.csv / table row (angles in deg)."""
    row = {"name": name}
    for field, unit in _METRIC_FIELDS:
        key = field + ("_deg" if unit == "deg" else "")
        row[key] = _metric_value(report, field, unit)
    for field in _FLAG_FIELDS:
        row[field] = int(getattr(report, field))
    row["aborted"] = int(report.aborted)
    return row


def write_metrics_csv(path, name: str, report: MetricsReport):
    row = metrics_row(name, report)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(row.keys())
        writer.writerow([v if isinstance(v, str) else repr(v)
                         for v in row.values()])


def read_metrics_csv(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        values = next(reader)
    row = dict(zip(header, values))
    for key in row:
        if key != "name":
            row[key] = float(row[key])
    for key in _FLAG_FIELDS + ["aborted"]:
        row[key] = int(row[key])
    return row


def write_run_results(out_dir, scn: Scenario, log: RunLog,
                      report: MetricsReport):
    """Write log.csv, metrics.csv, and config.echo for one finished run."""
    os.makedirs(out_dir, exist_ok=True)
    log.write_csv(os.path.join(out_dir, "log.csv"))
    write_metrics_csv(os.path.join(out_dir, "metrics.csv"), scn.name, report)
    with open(os.path.join(out_dir, "config.echo"), "w") as fh:
        fh.write(echo_config(scn))
    if scn.log_torques:
        log.write_torques_csv(os.path.join(out_dir, "torques.csv"))


@dataclass
class SuiteResult:
    """Outcome of one scenario inside a suite run."""

    name: str
    metrics: Optional[MetricsReport] = None
    error: Optional[str] = None

    @property
    def aborted(self) -> bool:
        return self.error is not None or (self.metrics is not None
                                          and self.metrics.aborted)


def run_suite(scenarios, out_dir=None) -> list:
    """Run many scenarios; failures are isolated per row.

    `scenarios` holds Scenario objects or paths to scenario files.  When
    `out_dir` is given each run's artifacts land in ``out_dir/<name>/``
    and the suite table in ``out_dir`` itself.
    """
    results = []
    for item in scenarios:
        try:
            scn = load_scenario(item) if isinstance(item, (str, os.PathLike)) \
                else item
        except Exception:
            results.append(SuiteResult(name=str(item),
                                       error=traceback.format_exc(limit=1)))
            continue
        try:
            log, report = run_scenario(scn)
            if out_dir is not None:
                write_run_results(os.path.join(out_dir, scn.name), scn, log,
                                  report)
            results.append(SuiteResult(name=scn.name, metrics=report))
        except Exception:
            results.append(SuiteResult(name=scn.name,
                                       error=traceback.format_exc(limit=1)))
    if out_dir is not None:
        write_table(out_dir, [metrics_row(r.name, r.metrics)
                              if r.metrics is not None
                              else {"name": r.name, "error": r.error or ""}
                              for r in results])
    return results


_TABLE_COLS = [
    ("eps_t_max", "eps_t_max [m]", "ok_eps_t"),
    ("eps_t_avg", "eps_t_avg [m]", None),
    ("eps_t_end", "eps_t_end [m]", None),
    ("eps_n_max", "eps_n_max [m]", "ok_eps_n"),
    ("eps_n_avg", "eps_n_avg [m]", None),
    ("eps_n_end", "eps_n_end [m]", None),
    ("eps_psi_max_deg", "eps_psi_max [deg]", "ok_eps_psi"),
    ("eps_psi_avg_deg", "eps_psi_avg [deg]", None),
    ("eps_psi_end_deg", "eps_psi_end [deg]", None),
    ("mu_avg", "mu_avg [-]", None),
]


def format_table(rows) -> str:
    """Aligned text table; '*' marks threshold exceedances, rows may error."""
    header = ["scenario"] + [label for _, label, _ in _TABLE_COLS] + ["flags"]
    body = []
    for row in rows:
        if "error" in row:
            body.append([row["name"], "ERROR: " + row["error"].strip()]
                        + [""] * (len(header) - 2))
            continue
        cells = [row["name"]]
        exceeded = []
        for key, _, flag in _TABLE_COLS:
            mark = ""
            if flag is not None and not row[flag]:
                mark = "*"
                exceeded.append(key.split("_")[1])
            cells.append(f"{row[key]:.3f}{mark}")
        flags = ",".join(exceeded) if exceeded else "-"
        if row.get("aborted"):
            flags += " ABORTED"
        cells.append(flags)
        body.append(cells)
    widths = [max(len(str(r[i])) for r in [header] + body)
              for i in range(len(header))]
    lines = []
    for r in [header, ["-" * w for w in widths]] + body:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def write_table(out_dir, rows):
    """Write table.txt (aligned text) and table.csv next to the run dirs."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "table.txt"), "w") as fh:
        fh.write(format_table(rows))
    keys = ["name"] + [key for key, _, _ in _TABLE_COLS] \
        + _FLAG_FIELDS + ["aborted"]
    with open(os.path.join(out_dir, "table.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in rows:
            if "error" in row:
                writer.writerow([row["name"]] + [""] * (len(keys) - 1))
            else:
                writer.writerow([row["name"]]
                                + [repr(row[k]) for k in keys[1:-4]]
                                + [row[k] for k in _FLAG_FIELDS]
                                + [row["aborted"]])
    return os.path.join(out_dir, "table.txt")


def collect_metrics(results_dir) -> list:
    """Gather metrics.csv rows from a results directory tree (sorted)."""
    rows = []
    direct = os.path.join(results_dir, "metrics.csv")
    if os.path.exists(direct):
        rows.append(read_metrics_csv(direct))
    for entry in sorted(os.listdir(results_dir)):
        sub = os.path.join(results_dir, entry, "metrics.csv")
        if os.path.isdir(os.path.join(results_dir, entry)) and os.path.exists(sub):
            rows.append(read_metrics_csv(sub))
    if not rows:
        raise FileNotFoundError(f"no metrics.csv under {results_dir}")
    return rows
