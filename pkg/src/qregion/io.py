"""Ensemble files, probability-cloud files and JSON reports.

Ensemble file (JSON)::

    {"format": "qregion-ensemble", "version": 1, "kind": "measurement",
     "dim": 2, "label": "trine",
     "elements": [[[[re, im], ...], ...], ...]}

``elements`` is an ``n x d x d`` nest of ``[re, im]`` pairs in ensemble order.
Floats are written with ``repr`` precision, so a write/read round trip is
bit-exact.

Cloud file: one probability vector per line, comma- or whitespace-separated.
Lines starting with ``#`` are comments; a first line containing non-numeric
tokens is taken as a header naming the outcomes.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import Ensemble, Kind
from .linalg import NotHermitianError

FORMAT_NAME = "qregion-ensemble"
FORMAT_VERSION = 1


class ParseError(ValueError):
    pass


def ensemble_to_dict(e: Ensemble) -> dict:
    el = np.stack([e.elements.real, e.elements.imag], axis=-1)
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": e.kind.value,
        "dim": e.dim,
        "label": e.label,
        "elements": el.tolist(),
    }


def ensemble_from_dict(data) -> Ensemble:
    if not isinstance(data, dict):
        raise ParseError("ensemble file must contain a JSON object")
    if data.get("format") != FORMAT_NAME:
        raise ParseError(f"not a {FORMAT_NAME} file")
    if data.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {data.get('version')!r}")
    try:
        kind = Kind(data["kind"])
        dim = int(data["dim"])
        arr = np.array(data["elements"], dtype=float)
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"malformed ensemble file: {exc}") from exc
    if arr.ndim != 4 or arr.shape[1:] != (dim, dim, 2) or arr.shape[0] == 0:
        raise ParseError(f"elements must have shape (n, {dim}, {dim}, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParseError("elements must be finite")
    return Ensemble(kind, arr[..., 0] + 1j * arr[..., 1], str(data.get("label", "")))


def write_ensemble(e: Ensemble, path) -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(e)) + "\n")


def read_ensemble(path) -> Ensemble:
    """Read an ensemble file; Hermiticity failures propagate as ``NotHermitianError``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    try:
        return ensemble_from_dict(data)
    except NotHermitianError:
        raise
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from exc


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _split(line: str) -> list[str]:
    return line.replace(",", " ").split()


def read_cloud(path) -> tuple[np.ndarray, list[str] | None]:
    """Return ``(points, header)`` from a cloud file."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    rows = []
    header = None
    for lineno, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        toks = _split(s)
        if not rows and header is None and not all(_is_number(t) for t in toks):
            header = toks
            continue
        try:
            vals = [float(t) for t in toks]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"line {lineno}: non-finite value")
        if rows and len(vals) != len(rows[0]):
            raise ParseError(f"line {lineno}: expected {len(rows[0])} columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise ParseError("cloud file has no data rows")
    if header is not None and len(header) != len(rows[0]):
        raise ParseError("header length does not match the column count")
    return np.array(rows), header


def write_cloud(points, path, header=None) -> None:
    pts = np.atleast_2d(points)
    out = []
    if header:
        out.append(",".join(header))
    out += [",".join(repr(float(v)) for v in row) for row in pts]
    Path(path).write_text("\n".join(out) + "\n")


def to_jsonable(obj):
    """Convert numpy values, enums and non-finite floats into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def make_report(command: str, body: dict, *, tolerances: dict, seed=None,
                timestamp: str | None = None) -> dict:
    report = {
        "tool": "qregion",
        "version": __version__,
        "command": command,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "tolerances": tolerances,
        "seed": seed,
    }
    report.update(body)
    return to_jsonable(report)


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
