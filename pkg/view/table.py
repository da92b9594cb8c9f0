"""Aligned text tables for humans, CSV and JSON for scripts."""

import csv

import io

import json

import sys

from pathlib import Path

from typing import Any, Optional, Sequence, Union

PathLike = Union[str, Path]

FORMATS = ("table", "csv", "json")


def _cell(value: Any) -> str:

    if value is None:
        return ""

    if isinstance(value, float):
        return f"{value:.6g}"

    if isinstance(value, int) and not isinstance(value, bool):
        return f"{value:,}"

    return str(value)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]], title: str = "") -> str:

    cells = [[_cell(v) for v in row] for row in rows]

    widths = [len(h) for h in headers]

    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))

    def line(values):
        # text left, numbers right
        out = []

        for i, v in enumerate(values):
            numeric = v[:1].isdigit() or v[:1] == "-" and v[1:2].isdigit()

            out.append(v.rjust(widths[i]) if numeric else v.ljust(widths[i]))

        return "  ".join(out).rstrip()

    lines = [title] if title else []

    lines.append(line(list(headers)))

    lines.append("  ".join("-" * w for w in widths))

    lines.extend(line(row) for row in cells)

    return "\n".join(lines) + "\n"


def csv_text(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:

    buf = io.StringIO()

    writer = csv.writer(buf, lineterminator="\n")

    writer.writerow(headers)

    for row in rows:
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])

    return buf.getvalue()


def json_text(obj: Any) -> str:

    return json.dumps(obj, indent=2) + "\n"


def emit(text: str, out: Optional[PathLike] = None) -> None:

    """Write to a file when out is given, otherwise to stdout."""

    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)

        sys.stdout.flush()


def emit_records(fmt: str, headers: Sequence[str], rows: Sequence[Sequence[Any]],
                 payload: Any, out: Optional[PathLike] = None, title: str = "") -> None:

    """
    Emit one result in the chosen format.

    table goes to stdout only; csv and json go to out when given, else stdout.
    payload is the JSON document for the json format.
    """

    if fmt == "table":
        emit(format_table(headers, rows, title))

        if out:
            emit(json_text(payload), out)
    elif fmt == "csv":
        emit(csv_text(headers, rows), out)
    else:
        emit(json_text(payload), out)
