"""Versioned CSV output for observable series."""
from __future__ import annotations

import csv
import io
import math
import os

import numpy as np

from .observables import ObservableSeries

SCHEMA = "pendular-series"
SCHEMA_VERSION = 1
_MAGIC = f"# {SCHEMA} v{SCHEMA_VERSION}"


class SchemaError(ValueError):
    pass


def _fmt(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".12g")


def series_columns(series: ObservableSeries) -> list[str]:
    cols = []
    for name in series.values:
        cols += [name, name + "_se"]
    return sorted(cols)


def format_series(series: ObservableSeries) -> str:
    """CSV text of ``series``: a version line, then ``time_s`` and sorted columns."""
    if len(series) == 0 or not series.values:
        raise ValueError("cannot emit an empty series")
    cols = series_columns(series)
    data = [series.times] + [
        series.errors[c[:-3]] if c.endswith("_se") and c[:-3] in series.values else series.values[c]
        for c in cols
    ]
    buf = io.StringIO()
    buf.write(_MAGIC + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s"] + cols)
    for row in zip(*data):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_series(series: ObservableSeries, path) -> str:
    """Write ``series`` to ``path``; returns the text written."""
    text = format_series(series)
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(text)
    return text


def write_table(path, columns: dict) -> str:
    """Plain versioned CSV of equal-length columns, written in the given order."""
    names = list(columns)
    buf = io.StringIO()
    buf.write(_MAGIC + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*(columns[n] for n in names)):
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    text = buf.getvalue()
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(text)
    return text


def read_series(path) -> ObservableSeries:
    """Inverse of :func:`emit_series`.  Unknown schema versions are rejected."""
    with open(path, newline="", encoding="ascii") as fh:
        first = fh.readline().rstrip("\n")
        if first != _MAGIC:
            raise SchemaError(f"{os.fspath(path)}: expected {_MAGIC!r}, found {first!r}")
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[0] != "time_s":
        raise SchemaError("first column must be time_s")
    arr = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    out = ObservableSeries(arr[:, 0])
    for j, name in enumerate(header[1:], 1):
        if name.endswith("_se"):
            out.errors[name[:-3]] = arr[:, j]
        else:
            out.values[name] = arr[:, j]
    return out
