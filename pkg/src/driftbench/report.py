"""Aggregation over repetitions and results tables."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .harness import RunRecord

COLUMNS = ("Dataset", "Approach", "Accuracy", "Detections", "ReqLabels", "R_Sum", "R_DD", "RRO", "M_Peak")
METRICS = ("accuracy", "detections", "req_labels", "r_sum", "r_dd", "rro", "m_peak")
FORMATS = ("csv", "json", "markdown")

TIMEOUT = "timeout"
INCONSISTENT = "inconsistent"
UNAVAILABLE = "n/a"

RRO_NOTE = ("RRO is computed from the mean R_Sum and mean R_DD over repetitions; "
            "std is the population standard deviation.")


@dataclass
class ReportRow:
    dataset: str
    approach: str
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    repetitions: int = 0
    timed_out: bool = False
    inconsistent: bool = False


def aggregate(record: RunRecord) -> ReportRow:
    """Mean and population std per metric; RRO from the mean runtimes."""
    cfg = record.config
    row = ReportRow(cfg.dataset.name, cfg.approach.value, repetitions=len(record.runs))
    if not record.runs:
        raise ValueError("cannot aggregate a record without runs")
    flags = {r.timed_out for r in record.runs}
    if flags == {True}:
        row.timed_out = True
        return row
    if len(flags) > 1:
        row.inconsistent = True
        return row

    for name in METRICS:
        if name == "rro":
            continue
        values = [getattr(r, name) for r in record.runs]
        if any(v is None for v in values):
            row.mean[name] = row.std[name] = None
            continue
        arr = np.asarray(values, dtype=float)
        row.mean[name] = float(arr.mean())
        row.std[name] = float(arr.std())
    r_sum, r_dd = row.mean["r_sum"], row.mean["r_dd"]
    row.mean["rro"] = r_sum / (r_sum - r_dd)
    row.std["rro"] = float(np.std([r.rro for r in record.runs]))
    return row


def _percent(v: float) -> str:
    return f"{v * 100:.0f}%"


def _seconds(v: float) -> str:
    return f"{v:.0f}s" if v > 10 else f"{v:.1f}s"


def _count(v: float) -> str:
    return f"{v:.0f}" if float(v).is_integer() else f"{v:.1f}"


def render_cells(row: ReportRow) -> list[str]:
    head = [row.dataset, row.approach]
    if row.timed_out:
        return head + [TIMEOUT] * (len(COLUMNS) - 2)
    if row.inconsistent:
        return head + [INCONSISTENT] * (len(COLUMNS) - 2)
    m = row.mean
    return head + [
        _percent(m["accuracy"]),
        _count(m["detections"]),
        _percent(m["req_labels"]),
        _seconds(m["r_sum"]),
        _seconds(m["r_dd"]),
        f"{m['rro']:.2f}",
        UNAVAILABLE if m["m_peak"] is None else f"{m['m_peak']:.0f}",
    ]


def _header_lines(config_text: Optional[str]) -> list[str]:
    lines = [RRO_NOTE]
    if config_text:
        lines.append("effective configuration:")
        lines.extend(config_text.rstrip("\n").splitlines())
    return lines


def emit(rows: Sequence[ReportRow], fmt: str = "markdown", config_text: Optional[str] = None) -> str:
    """Render ``rows`` as ``csv``, ``json`` or ``markdown``.

    The effective configuration, when given, is embedded in the header: as
    ``#`` comment lines for csv, a fenced block for markdown and a
    ``config`` field for json.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    if not rows:
        raise ValueError("nothing to report")

    if fmt == "json":
        doc = {"note": RRO_NOTE, "config": config_text, "columns": list(COLUMNS), "rows": []}
        for r in rows:
            doc["rows"].append({
                "dataset": r.dataset, "approach": r.approach, "repetitions": r.repetitions,
                "timed_out": r.timed_out, "inconsistent": r.inconsistent,
                "mean": r.mean or None, "std": r.std or None,
            })
        return json.dumps(doc, indent=2) + "\n"

    if fmt == "csv":
        buf = io.StringIO()
        for line in _header_lines(config_text):
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow(render_cells(r))
        return buf.getvalue()

    out = []
    out.append(f"<!-- {RRO_NOTE} -->")
    if config_text:
        out += ["", "```", config_text.rstrip("\n"), "```"]
    out += ["", "| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
    for r in rows:
        cells = [c.replace("|", "\\|") for c in render_cells(r)]
        out.append("| " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"


def _parse_cell(column: str, text: str):
    if text in (TIMEOUT, INCONSISTENT, UNAVAILABLE):
        return None
    if text.endswith("%"):
        return float(text[:-1]) / 100
    if text.endswith("s"):
        return float(text[:-1])
    return float(text)


def parse_csv(text: str) -> list[dict]:
    """Read back a CSV report; numeric cells become floats, sentinels ``None``."""
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected columns {header}")
    rows = []
    for cells in reader:
        row = {"Dataset": cells[0], "Approach": cells[1]}
        for col, cell in zip(COLUMNS[2:], cells[2:]):
            row[col] = _parse_cell(col, cell)
        row["timed_out"] = cells[2] == TIMEOUT
        rows.append(row)
    return rows


def rows_from_json(text: str) -> tuple[list[ReportRow], Optional[str]]:
    doc = json.loads(text)
    rows = []
    for r in doc["rows"]:
        rows.append(ReportRow(r["dataset"], r["approach"], r["mean"] or {}, r["std"] or {},
                              r.get("repetitions", 0), r["timed_out"], r.get("inconsistent", False)))
    return rows, doc.get("config")


def build_report(records: Sequence[RunRecord]) -> list[ReportRow]:
    """Aggregate records, ordered by dataset then approach in first-seen order."""
    datasets: list[str] = []
    for rec in records:
        if rec.config.dataset.name not in datasets:
            datasets.append(rec.config.dataset.name)
    rows = [aggregate(r) for r in records]
    return sorted(rows, key=lambda row: datasets.index(row.dataset))


def rro_consistent(row: ReportRow, tol: float = 1e-9) -> bool:
    if row.timed_out or row.inconsistent:
        return True
    m = row.mean
    return math.isclose(m["rro"], m["r_sum"] / (m["r_sum"] - m["r_dd"]), rel_tol=tol, abs_tol=tol)
