"""Trace CSV and summary JSON files, written atomically."""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .engine import ScenarioTrace, Summary

SCHEMA_VERSION = 1


def atomic_write(path: str | Path, text: str) -> Path:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def trace_header(trace: ScenarioTrace) -> list[str]:
    cols = list(ScenarioTrace.COLUMNS)
    if trace.rho is not None:
        cols += [f"rho_{i + 1}" for i in range(trace.rho.shape[1])]
    return cols


def trace_table(trace: ScenarioTrace) -> np.ndarray:
    parts = [np.asarray(trace.column(c), dtype=float)[:, None] for c in ScenarioTrace.COLUMNS]
    if trace.rho is not None:
        parts.append(np.asarray(trace.rho, dtype=float))
    return np.hstack(parts)


def trace_to_csv(trace: ScenarioTrace) -> str:
    """CSV text with one row per step; floats use ``repr`` so a read-back is exact."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(trace))
    for row in trace_table(trace):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def write_trace_csv(trace: ScenarioTrace, path: str | Path) -> Path:
    return atomic_write(path, trace_to_csv(trace))


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Read a trace CSV back into ``{column: array}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def summary_document(trace: ScenarioTrace, summary: Summary, extra: dict | None = None) -> dict:
    from . import __version__

    config = trace.config
    seed = getattr(config.demand, "seed", None)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "config_name": config.name,
        "config_hash": cfgmod.config_hash(config),
        "seed": seed,
        "metric_definitions": {
            "window_frac": summary.window_frac,
            "late_window": "final window_frac of the horizon steps",
            "travel_time_formula": summary.travel_time_formula,
            "reduction_ratio": "1 - TT_vsl / TT_base",
        },
        "metrics": summary.as_dict(),
        "config": cfgmod.to_dict(config),
    }
    if extra:
        doc.update(extra)
    return doc


def write_json(doc: dict, path: str | Path) -> Path:
    return atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
