"""Deterministic CSV/JSON writers and readers for CLI artifacts."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from enum import Enum
from pathlib import Path

import numpy as np

from .rockdyn import Event, Outcome, ResponseHistory, classify_outcome

SIG_DIGITS = 12

SERIES_HEADER = ("t [s]", "theta [rad]", "theta_dot [rad/s]", "x [m]", "x_dot [m/s]")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, f".{SIG_DIGITS}g")
    return str(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return float(format(v, f".{SIG_DIGITS}g"))
    return obj


def write_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
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


def write_json(path, obj) -> Path:
    return write_atomic(path, json.dumps(_jsonable(obj), indent=2) + "\n")


def write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return write_atomic(path, buf.getvalue())


def history_rows(history: ResponseHistory):
    return zip(history.t, history.theta, history.theta_dot, history.x, history.x_dot)


def write_history(out_dir, history: ResponseHistory, stem: str = "series", events_stem: str = "events"):
    out_dir = Path(out_dir)
    series = write_csv(out_dir / f"{stem}.csv", SERIES_HEADER, history_rows(history))
    events = write_json(out_dir / f"{events_stem}.json", {
        "mechanism": history.mechanism,
        "outcome": history.outcome,
        "events": [e.to_dict() for e in history.events],
    })
    return series, events


def read_series_csv(path, events_path=None) -> ResponseHistory:
    """Load a history written by :func:`write_history`.

    Events (and the outcome) are read from ``events_path``, or from
    ``events.json`` beside the series when present.
    """
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if events_path is None:
        candidate = path.with_name(path.name.replace("series", "events")).with_suffix(".json")
        events_path = candidate if candidate.exists() else None
    events: tuple[Event, ...] = ()
    mechanism = "rocking"
    outcome = None
    if events_path is not None:
        meta = json.loads(Path(events_path).read_text())
        events = tuple(Event.from_dict(e) for e in meta.get("events", []))
        mechanism = meta.get("mechanism", mechanism)
        outcome = meta.get("outcome")
    hist = ResponseHistory(data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4],
                           events, Outcome.REST, mechanism)
    out = Outcome(outcome) if outcome else classify_outcome(hist)
    return ResponseHistory(hist.t, hist.theta, hist.theta_dot, hist.x, hist.x_dot,
                           events, out, mechanism)
