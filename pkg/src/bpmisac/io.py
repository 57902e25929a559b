"""CSV and JSON writers for sweep records and curves.

Floats are written with ``repr`` so the text is a pure function of the
values; rows are LF-terminated UTF-8.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json

from .sim import SweepRecord

__all__ = ["RECORD_COLUMNS", "records_to_csv", "records_to_json", "table_to_csv", "write_text"]

RECORD_COLUMNS = [f.name for f in dataclasses.fields(SweepRecord)]
_TIMED = "wall_time"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def records_to_csv(records, include_timing: bool = False) -> str:
    """Wall time differs between runs, so it is only written on request."""
    cols = [c for c in RECORD_COLUMNS if include_timing or c != _TIMED]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        row = dataclasses.asdict(rec)
        writer.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def records_to_json(records, include_timing: bool = False) -> str:
    rows = []
    for rec in records:
        row = dataclasses.asdict(rec)
        if not include_timing:
            row.pop(_TIMED)
        rows.append(row)
    return json.dumps(rows, indent=2) + "\n"


def table_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
