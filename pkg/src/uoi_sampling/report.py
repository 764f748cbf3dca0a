"""Delimited output for sweeps and policy tables.

Sweep CSV layout: UTF-8, ``#`` comment lines carrying the provenance of
every default, one header row, then one row per (y, policy). Floats carry 6
significant digits and missing values are empty fields.
"""

from __future__ import annotations

import csv
from dataclasses import astuple
from typing import IO, Iterable, Mapping

from .experiments import SWEEP_COLUMNS, SweepRow

_INT_COLS = {"y", "horizon", "seed"}
_STR_COLS = {"policy", "error"}


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def write_comments(out: IO[str], provenance: Mapping[str, object], title: str) -> None:
    out.write(f"# {title}\n")
    for k, v in provenance.items():
        out.write(f"# {k}={v}\n")


def write_sweep_csv(rows: Iterable[SweepRow], out: IO[str], provenance: Mapping[str, object]) -> None:
    write_comments(out, provenance, "uoi-sampling sweep")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([fmt(v) for v in astuple(row)])


def read_sweep_csv(src: IO[str]) -> list[dict[str, object]]:
    """Parse a sweep CSV back into typed dicts (None for empty fields)."""
    lines = [ln for ln in src if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
        raise ValueError(f"unexpected sweep columns {reader.fieldnames}")
    rows = []
    for raw in reader:
        row: dict[str, object] = {}
        for k, v in raw.items():
            if k in _STR_COLS:
                row[k] = v
            elif v == "":
                row[k] = None
            elif k in _INT_COLS:
                row[k] = int(v)
            else:
                row[k] = float(v)
        rows.append(row)
    return rows


def write_gnuplot(rows: Iterable[SweepRow], out: IO[str], column: str = "avg_uoi") -> None:
    """Two-column ``y value`` blocks, one per policy, separated for ``index``."""
    by_policy: dict[str, list[SweepRow]] = {}
    for row in rows:
        by_policy.setdefault(row.policy, []).append(row)
    for i, (name, block) in enumerate(by_policy.items()):
        if i:
            out.write("\n\n")
        out.write(f"# {name} y {column}\n")
        for row in block:
            val = getattr(row, column)
            if val is not None:
                out.write(f"{row.y} {fmt(val)}\n")


def write_policy_csv(rows: Iterable[tuple], out: IO[str], header: tuple[str, ...], provenance: Mapping[str, object]) -> None:
    write_comments(out, provenance, "uoi-sampling policy table")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
