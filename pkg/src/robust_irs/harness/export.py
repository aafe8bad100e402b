"""Plot-ready CSV/JSON export of aggregated sweep rows.

Both formats share one schema (``COLUMNS``). Floats are written with
``repr`` (shortest round-trip decimal) and NaN as an empty CSV cell or JSON
``null``, so identical rows always give identical bytes.
"""

import csv
import io
import json
import math

__all__ = ["COLUMNS", "ExportError", "to_csv", "to_json", "export"]

COLUMNS = ("sweep_param", "sweep_value", "scheme", "metric", "mean", "std", "n_trials")


class ExportError(OSError):
    """Export target could not be written."""


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if hasattr(value, "item"):  # numpy scalar
        return _json_value(value.item())
    return value


def to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_cell(_json_value(row[c])) for c in COLUMNS])
    return buf.getvalue()


def to_json(rows):
    records = [{c: _json_value(row[c]) for c in COLUMNS} for row in rows]
    return json.dumps({"columns": list(COLUMNS), "records": records}, indent=2, allow_nan=False) + "\n"


def export(rows, path, fmt="csv"):
    """Write ``rows`` to ``path`` (``"-"`` for stdout text return) in ``fmt``.

    Returns the written text.
    """
    if fmt == "csv":
        text = to_csv(rows)
    elif fmt == "json":
        text = to_json(rows)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    if path is None or str(path) == "-":
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return text
