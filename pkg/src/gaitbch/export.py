"""Sweep dataset serialisation.

CSV: one row per record, columns in :data:`gaitbch.sweep.FIELDS` order,
floats written with 17 significant digits (``nan`` for missing values).

JSON (``schema_version`` 1)::

    {"schema_version": 1, "config_hash": "...", "config": {...},
     "fields": [...], "records": [{...}, ...]}

The config omits output-only settings (output directory, worker count,
figure flag), so the file does not depend on where it was written.

Non-finite floats are written as ``null`` so the file is strict JSON; on
import ``null`` in a float column reads back as ``nan``.  Every other float
is written with ``repr`` and so reads back bit-identically.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .sweep import FIELDS, INT_FIELDS, STRING_FIELDS, SweepConfig, SweepDataset

SCHEMA_VERSION = 1


class ExportError(OSError):
    """Writing or reading a dataset file failed."""


def _fmt(name, value) -> str:
    if name in STRING_FIELDS:
        return str(value)
    if name in INT_FIELDS:
        return str(int(value))
    return format(float(value), ".17g")


def to_csv_text(dataset: SweepDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for rec in dataset.records:
        writer.writerow([_fmt(name, rec[name]) for name in FIELDS])
    return buf.getvalue()


def _parse(name, text: str):
    if name in STRING_FIELDS:
        return text
    if name in INT_FIELDS:
        return int(text)
    return float(text)


def read_csv(path) -> list:
    """Records from a CSV export, typed per column."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != FIELDS:
        raise ExportError(f"{path}: header does not match the dataset columns")
    return [{name: _parse(name, v) for name, v in zip(FIELDS, row)} for row in rows[1:]]


def _json_value(name, value):
    if name in STRING_FIELDS or name in INT_FIELDS:
        return value
    value = float(value)
    return value if math.isfinite(value) else None


def to_json_text(dataset: SweepDataset) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": dataset.config_hash,
        "config": {k: v for k, v in dataset.config.to_dict().items() if k not in SweepConfig._NOT_HASHED},
        "fields": list(FIELDS),
        "records": [{name: _json_value(name, rec[name]) for name in FIELDS} for rec in dataset.records],
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def from_json_text(text: str) -> SweepDataset:
    doc = json.loads(text)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    cfg = dict(doc["config"])
    config = SweepConfig.from_dict(cfg)
    records = []
    for raw in doc["records"]:
        rec = {}
        for name in FIELDS:
            v = raw[name]
            if name in STRING_FIELDS or name in INT_FIELDS:
                rec[name] = v
            else:
                rec[name] = math.nan if v is None else float(v)
        records.append(rec)
    return SweepDataset(config, doc["config_hash"], tuple(records))


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def export(dataset: SweepDataset, out_dir, formats=("csv", "json"), stem: str = "sweep") -> list:
    """Write the dataset in each requested format; returns the paths written."""
    out_dir = Path(out_dir)
    paths = []
    for fmt in formats:
        if fmt == "csv":
            paths.append(_write(out_dir / f"{stem}.csv", to_csv_text(dataset)))
        elif fmt == "json":
            paths.append(_write(out_dir / f"{stem}.json", to_json_text(dataset)))
        else:
            raise ValueError(f"unknown export format {fmt!r}")
    return paths


def load_json(path) -> SweepDataset:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc
    return from_json_text(text)
