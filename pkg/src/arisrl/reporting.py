"""Plot-ready output files: headered CSV metrics, JSON-line records, hashes.

Every file starts with comment lines embedding the resolved configuration and
seed as canonical JSON, so any output can be traced back to (and re-run from)
exactly the inputs that produced it.  Writers are deterministic: sorted JSON
keys, fixed line terminators, and repr-style float formatting, which makes
byte-identical reruns testable.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from pathlib import Path

import numpy as np

_INT_RE = re.compile(r"^-?\d+$")


def _jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, plain types only."""
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    """SHA-256 of the canonical JSON form."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


# ---- columnar metrics files ---------------------------------------------------


def write_metrics_csv(path, fieldnames, rows, meta: dict | None = None) -> None:
    """Comma-separated table preceded by '# key=<json>' header lines."""
    buf = io.StringIO()
    for key in sorted(meta or {}):
        buf.write(f"# {key}={canonical_json(meta[key])}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    Path(path).write_text(buf.getvalue())


def _format_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse_cell(text: str):
    if _INT_RE.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def read_metrics_csv(path) -> tuple[list[str], list[list], dict]:
    """Inverse of write_metrics_csv: (fieldnames, typed rows, meta)."""
    meta: dict = {}
    lines = Path(path).read_text().splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("# "):
            body_start = i
            break
        key, _, value = line[2:].partition("=")
        meta[key] = json.loads(value)
    else:
        body_start = len(lines)
    reader = csv.reader(lines[body_start:])
    table = list(reader)
    if not table:
        raise ValueError(f"{path}: no header row")
    fieldnames = table[0]
    rows = [[_parse_cell(c) for c in row] for row in table[1:]]
    return fieldnames, rows, meta


def aggregate_metrics(paths, key_field: str = "episode") -> tuple[list[str], list[list]]:
    """Mean and population std per key across per-seed metrics files.

    All files must share fieldnames and an identical key column.  Output
    columns: the key, then <name>_mean and <name>_std for every other column.
    """
    if not paths:
        raise ValueError("aggregate_metrics: no input files")
    tables = []
    fieldnames = None
    for p in paths:
        names, rows, _ = read_metrics_csv(p)
        if fieldnames is None:
            fieldnames = names
        elif names != fieldnames:
            raise ValueError(f"{p}: fieldnames {names} differ from {fieldnames}")
        tables.append(np.array(rows, dtype=float))
    if key_field not in fieldnames:
        raise ValueError(f"key field {key_field!r} not in {fieldnames}")
    key_idx = fieldnames.index(key_field)
    base_keys = tables[0][:, key_idx]
    for p, t in zip(paths, tables):
        if t.shape != tables[0].shape or not np.array_equal(t[:, key_idx], base_keys):
            raise ValueError(f"{p}: key column differs between per-seed files")
    stack = np.stack(tables)  # (seeds, rows, cols)
    out_fields = [key_field]
    for i, name in enumerate(fieldnames):
        if i != key_idx:
            out_fields += [f"{name}_mean", f"{name}_std"]
    out_rows = []
    for r in range(stack.shape[1]):
        row = [_maybe_int(base_keys[r])]
        for i in range(len(fieldnames)):
            if i != key_idx:
                col = stack[:, r, i]
                row += [float(col.mean()), float(col.std())]
        out_rows.append(row)
    return out_fields, out_rows


def _maybe_int(x: float):
    return int(x) if float(x).is_integer() else float(x)


# ---- line-delimited records ----------------------------------------------------


def write_records_jsonl(path, records, meta: dict | None = None) -> None:
    """One canonical-JSON object per line; an optional meta record leads."""
    buf = io.StringIO()
    if meta is not None:
        buf.write(canonical_json({"kind": "meta", **meta}) + "\n")
    for rec in records:
        buf.write(canonical_json(rec) + "\n")
    Path(path).write_text(buf.getvalue())


def read_records_jsonl(path) -> list[dict]:
    return [
        json.loads(line)
        for line in Path(path).read_text().splitlines()
        if line.strip()
    ]
