"""Deterministic report files: report.json, data.csv and plotdata.tsv."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IoFailure

VERDICTS = ("PASS", "INCONCLUSIVE", "FAIL")


def verdict(measured, prediction, band):
    """PASS within ``band``, FAIL beyond ``2 band``, INCONCLUSIVE in between."""
    if measured is None or prediction is None or not math.isfinite(measured):
        return "INCONCLUSIVE"
    gap = abs(measured - prediction)
    if gap <= band:
        return "PASS"
    if gap > 2 * band:
        return "FAIL"
    return "INCONCLUSIVE"


def worst(verdicts):
    vs = list(verdicts)
    return max(vs, key=VERDICTS.index) if vs else "INCONCLUSIVE"


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def json_text(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def plot_text(points):
    return "".join(f"{fmt(x)}\t{fmt(y)}\n" for x, y in points)


@dataclass
class Report:
    summary: dict
    columns: tuple
    rows: list
    plot_points: list = field(default_factory=list)
    extra_files: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return self.summary.get("verdict", "INCONCLUSIVE")


def emit_report(report: Report, out_dir, plotdata=True):
    """Write the report files into ``out_dir``; returns the written paths."""
    if not report.rows:
        raise IoFailure("refusing to write a report with no result rows")
    out = Path(out_dir)
    files = {"report.json": json_text(report.summary),
             "data.csv": csv_text(report.columns, report.rows)}
    if plotdata and report.plot_points:
        files["plotdata.tsv"] = plot_text(report.plot_points)
    files.update(report.extra_files)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name in sorted(files):
            path = out / name
            path.write_text(files[name])
            written.append(path)
    except OSError as exc:
        raise IoFailure(f"cannot write reports to {out}: {exc}") from exc
    return written
