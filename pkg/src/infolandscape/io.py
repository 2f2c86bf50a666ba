"""Reading probability tables and writing reports.

Tables are CSV files with a header naming integer state columns followed by
``p`` (``s,x,y,p`` for joints, ``s,x,p`` and ``s,y,p`` for marginals), or
JSON objects ``{"schema": 1, "columns": [...], "rows": [[...], ...]}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .distributions import LN2

SCHEMA_VERSION = 1
INPUT_TOL = 1e-9


class ParseError(Exception):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class InvalidInput(Exception):
    """Well-formed input that is not a valid distribution."""


def _rows_from_csv(text: str, columns: Sequence[str]):
    reader = csv.reader(io.StringIO(text))
    header = None
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if header is None:
            header = cells
            if header != list(columns):
                raise ParseError(f"expected header {','.join(columns)!r}, got {','.join(header)!r}", lineno)
            continue
        if len(cells) != len(columns):
            raise ParseError(f"expected {len(columns)} fields, got {len(cells)}", lineno)
        try:
            idx = tuple(int(c) for c in cells[:-1])
            p = float(cells[-1])
        except ValueError:
            raise ParseError(f"cannot parse row {row!r}", lineno) from None
        yield lineno, idx, p
    if header is None:
        raise ParseError("empty input", 1)


def _rows_from_json(text: str, columns: Sequence[str]):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc.msg), exc.lineno) from None
    if not isinstance(obj, dict) or obj.get("columns") != list(columns) or not isinstance(obj.get("rows"), list):
        raise ParseError(f"JSON table needs columns {list(columns)} and a rows list")
    for k, row in enumerate(obj["rows"], start=1):
        if not isinstance(row, list) or len(row) != len(columns):
            raise ParseError(f"row {k} has the wrong length")
        try:
            idx = tuple(int(v) for v in row[:-1])
            p = float(row[-1])
        except (TypeError, ValueError):
            raise ParseError(f"row {k} is not numeric") from None
        yield k, idx, p


def parse_table(text: str, columns: Sequence[str], fmt: str = "csv", renormalize: bool = False) -> np.ndarray:
    """Dense probability array from a sparse table; missing states have mass 0."""
    rows = list(_rows_from_json(text, columns) if fmt == "json" else _rows_from_csv(text, columns))
    if not rows:
        raise ParseError("table has no rows")
    seen = {}
    for lineno, idx, p in rows:
        if any(i < 0 for i in idx):
            raise ParseError(f"negative state label in {idx}", lineno)
        if idx in seen:
            raise ParseError(f"duplicate state {idx} (first on line {seen[idx]})", lineno)
        seen[idx] = lineno
    shape = tuple(max(r[1][k] for r in rows) + 1 for k in range(len(columns) - 1))
    arr = np.zeros(shape)
    for _, idx, p in rows:
        if not math.isfinite(p) or p < 0:
            raise InvalidInput(f"probability {p!r} at state {idx} is not a nonnegative number")
        arr[idx] = p
    if any(k < 2 for k in shape):
        raise InvalidInput(f"every axis needs at least two states, got shape {shape}")
    total = arr.sum()
    if total <= 0:
        raise InvalidInput("table has zero total mass")
    if abs(total - 1.0) > INPUT_TOL and not renormalize:
        raise InvalidInput(f"probabilities sum to {total!r}; pass --renormalize to rescale")
    return arr / total


def read_table(path: str | Path, columns: Sequence[str], renormalize: bool = False) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    fmt = "json" if path.suffix.lower() == ".json" else "csv"
    return parse_table(text, columns, fmt, renormalize)


def table_to_csv(arr: np.ndarray, columns: Sequence[str]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for idx in np.ndindex(arr.shape):
        writer.writerow([*idx, repr(float(arr[idx]))])
    return out.getvalue()


def info(nats: float) -> dict[str, float]:
    """An information value in both units."""
    nats = float(nats)
    return {"nats": nats, "bits": nats / LN2}


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dump_report(report: dict[str, Any]) -> str:
    """Serialise a report with a fixed key order and finite numbers."""
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def flatten(report: dict[str, Any], prefix: str = "") -> list[tuple[str, Any]]:
    rows = []
    for key, value in report.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            rows += flatten(value, name)
        else:
            rows.append((name, json.dumps(_clean(value))))
    return rows


def report_to_csv(report: dict[str, Any]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(flatten(report))
    return out.getvalue()
