"""CSV and JSON persistence for traces, particle snapshots and reports."""

import csv
import json
from pathlib import Path

import numpy as np

TRACE_COLUMNS = ("iter", "gamma", "ksd2", "mean_grad_norm", "elapsed_ms")


def _fmt(x):
    # 17 significant digits round-trips every double
    return format(float(x), ".17g")


def write_trace(path, records):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for rec in records:
            fh.write(
                f"{int(rec.iter)},{_fmt(rec.gamma)},{_fmt(rec.ksd2)},"
                f"{_fmt(rec.mean_grad_norm)},{_fmt(rec.elapsed_ms)}\n"
            )


def read_trace(path):
    """Parse a trace CSV back into a list of dicts with float values."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {reader.fieldnames}")
        rows = []
        for row in reader:
            rows.append({k: (int(v) if k == "iter" else float(v)) for k, v in row.items()})
    return rows


def snapshot_name(it):
    return f"particles_{int(it):06d}.csv"


def write_snapshot(directory, it, positions):
    path = Path(directory) / snapshot_name(it)
    with path.open("w", newline="") as fh:
        for row in np.atleast_2d(positions):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_snapshot(path):
    return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_report(path, report):
    Path(path).write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
