"""Deterministic report bundles: a JSON summary plus one CSV table per curve.

Every file is a pure function of the report and the package version.  Floats
are written with 17 significant digits so tables parse back to identical
values, and each file is written to a temporary sibling first and renamed into
place, so an interrupted write never leaves a truncated table behind.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import format_scenario, scenario_values

VERSION = f"fbmc_mimo {__version__}"

SINR_COLUMNS = ("subcarrier_index", "value_db", "combiner", "trial_stat")
TRACKING_COLUMNS = ("iteration", "value_db", "combiner", "trial_stat",
                    "mf_noisy_db", "mf_clean_db", "mmse_clean_db")
INT_COLUMNS = ("subcarrier_index", "iteration")
TEXT_COLUMNS = ("combiner", "trial_stat")
SINR_STATS = ("mean", "var")


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def format_table(columns, rows):
    """CSV text with a header row, ``\\n`` line endings and 17-digit floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def parse_table(text):
    """Inverse of :func:`format_table`: ``(columns, rows)`` with typed cells."""
    reader = csv.reader(io.StringIO(text))
    columns = tuple(next(reader))
    rows = []
    for raw in reader:
        if len(raw) != len(columns):
            raise ValueError(f"row has {len(raw)} cells, header has {len(columns)}")
        row = []
        for name, cell in zip(columns, raw):
            if name in INT_COLUMNS:
                row.append(int(cell))
            elif name in TEXT_COLUMNS:
                row.append(cell)
            else:
                row.append(float(cell))
        rows.append(tuple(row))
    return columns, rows


def read_table(path):
    return parse_table(Path(path).read_text())


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and an atomic rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _scenario_echo(scenario):
    # the worker count is an execution detail and never changes results
    values = scenario_values(scenario)
    values["run"] = {k: v for k, v in values["run"].items() if k != "workers"}
    return values


def sinr_tables(report):
    """``{file name: (columns, rows)}`` for a SinrReport, one file per combiner."""
    mean, var = report.mean, report.var
    tables = {}
    for combiner in sorted(report.per_trial):
        rows = []
        for stat, values in (("mean", mean[combiner]), ("var", var[combiner])):
            rows.extend((l, float(v), combiner, stat) for l, v in enumerate(values))
        tables[f"sinr_{combiner}.csv"] = (SINR_COLUMNS, rows)
    return tables


def tracking_tables(report):
    base = report.median_baselines
    rows = [
        (i, float(v), "blind", "median", base["mf_noisy"], base["mf_clean"], base["mmse_clean"])
        for i, v in enumerate(report.median_trace)
    ]
    return {"tracking.csv": (TRACKING_COLUMNS, rows)}


def report_tables(report):
    if report.kind == "blind_tracking":
        return tracking_tables(report)
    return sinr_tables(report)


def report_summary(report, failures=()):
    return {
        "version": VERSION,
        "kind": report.kind,
        "scenario": _scenario_echo(report.scenario),
        "statistics": report.summary(),
        "failures": list(failures),
    }


def _plot(path, columns, rows, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "fbmc_mimo"
    fig, ax = plt.subplots(figsize=(6, 4))
    x_name = columns[0]
    curves = {}
    for row in rows:
        curves.setdefault((row[2], row[3]), []).append((row[0], row[1]))
    for (combiner, stat), pts in curves.items():
        if stat == "var":
            continue
        x, y = zip(*pts)
        ax.plot(x, y, label=f"{combiner} {stat}")
    if x_name == "iteration":
        for j, name in enumerate(columns[4:], start=4):
            ax.axhline(rows[0][j], linestyle="--", linewidth=0.8, label=name)
    ax.set_xlabel(x_name)
    ax.set_ylabel("SINR (dB)")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write(path, buf.getvalue())


def write_reports(report, out_dir, plot=False, failures=()):
    """Write the bundle of one report.

    Parameters
    ----------
    report : SinrReport or TrackingReport
    out_dir : path-like
        Created if needed.
    plot : bool
        Also write an SVG line plot next to every table.
    failures : sequence of dict
        Failed points to record in the summary.

    Returns
    -------
    list of pathlib.Path
        Written files, summary first.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "summary.json"]
    atomic_write(paths[0], _json(report_summary(report, failures)))
    scenario_path = out / "scenario.ini"
    atomic_write(scenario_path, format_scenario(report.scenario.replace(workers=1)))
    paths.append(scenario_path)
    for name, (columns, rows) in report_tables(report).items():
        path = out / name
        atomic_write(path, format_table(columns, rows))
        paths.append(path)
        if plot:
            svg = path.with_suffix(".svg")
            _plot(svg, columns, rows, path.stem)
            paths.append(svg)
    return paths


def write_sweep(points, out_dir, plot=False):
    """Write one sub-bundle per successful point plus a sweep summary.

    Failed points appear in ``summary.json`` under ``failures`` with their
    error text.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    failures = []
    paths = []
    for i, p in enumerate(points):
        name = f"point_{i:02d}"
        entry = {"index": i, "axis": p.axis, "value": p.value, "ok": p.ok}
        if p.ok:
            entry["directory"] = name
            entry["statistics"] = p.report.summary()
            paths.extend(write_reports(p.report, out / name, plot=plot))
        else:
            entry["error"] = p.error
            failures.append({"index": i, "axis": p.axis, "value": p.value, "error": p.error})
        entries.append(entry)
    summary = {"version": VERSION, "kind": "sweep", "points": entries, "failures": failures}
    path = out / "summary.json"
    atomic_write(path, _json(summary))
    return [path] + paths
