"""JSON and CSV encodings of a :class:`~pointerlab.mc.Report`.

Both encodings round floats to ``FLOAT_DIGITS`` decimals through the same
function, so a number reads identically in either.  JSON keys are sorted.

CSV has one row per result bin with columns::

    experiment, group, key, successes, trials, estimate, wilson_lo, wilson_hi,
    oracle, oracle_decimal, z, within_4sigma

Empty cells stand for values that do not apply (no tally, no exact value).
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any

from .mc import Report

FLOAT_DIGITS = 10

CSV_COLUMNS = (
    "experiment",
    "group",
    "key",
    "successes",
    "trials",
    "estimate",
    "wilson_lo",
    "wilson_hi",
    "oracle",
    "oracle_decimal",
    "z",
    "within_4sigma",
)


def canonical(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        return float(round(float(value), FLOAT_DIGITS)) + 0.0
    if isinstance(value, dict):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical(v) for v in value]
    return value


def to_json(report: Report) -> str:
    return json.dumps(canonical(report.to_dict()), sort_keys=True, indent=2) + "\n"


def _key_order(key: str):
    return (0, int(key), "") if key.lstrip("-").isdigit() else (1, 0, key)


def csv_rows(report: Report) -> list[dict[str, Any]]:
    rows = []
    for group in sorted(report.results):
        bins = report.results[group]
        for key in sorted(bins, key=_key_order):
            cells = canonical(bins[key])
            row = {"experiment": report.experiment, "group": group, "key": key}
            row.update({c: cells.get(c) for c in CSV_COLUMNS[3:]})
            rows.append(row)
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in csv_rows(report):
        writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def render(report: Report, fmt: str) -> str:
    return to_csv(report) if fmt == "csv" else to_json(report)
