"""Deterministic JSON/CSV rendering of test and simulation reports.

Floats are written with 17 significant digits and keys in a fixed order, so
identical runs produce byte-identical files and parsing recovers every
float exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from markovgof import __version__
from markovgof.bootstrap import TestReport
from markovgof.montecarlo import McReport

__all__ = ["dumps", "emit_report", "mc_csv", "report_document"]

CSV_COLUMNS = ("n", "alpha", "dgp", "variant", "rejection_rate", "replications", "B", "seed")


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    if not any(c in text for c in ".eEn"):
        text += ".0"
    return text


def _render(obj, indent: int, level: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(key))}: ")
            _render(value, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            out.append("[")
            for i, value in enumerate(items):
                _render(value, indent, level + 1, out)
                if i < len(items) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, value in enumerate(items):
            out.append(pad)
            _render(value, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out: list[str] = []
    _render(obj, indent, 0, out)
    return "".join(out) + "\n"


def report_document(report, command: str, config: dict | None = None) -> dict:
    """Wrap a result with everything needed to reproduce it."""
    doc = {
        "tool": "markovgof",
        "version": __version__,
        "command": command,
        "config": dict(config or {}),
    }
    if isinstance(report, TestReport):
        doc["result"] = report.to_dict()
    elif isinstance(report, McReport):
        doc["result"] = {"rows": [asdict(r) for r in report.rows]}
    elif isinstance(report, (list, tuple)) and all(isinstance(r, McReport) for r in report):
        doc["result"] = {"rows": [asdict(row) for r in report for row in r.rows]}
    else:
        raise TypeError(f"unsupported report type {type(report).__name__}")
    return doc


def emit_report(report, path, command: str = "test", config: dict | None = None) -> str:
    """Write the JSON report to ``path`` (``-`` for none) and return its text."""
    text = dumps(report_document(report, command, config))
    if path and str(path) != "-":
        Path(path).write_text(text, encoding="utf-8")
    return text


def mc_csv(reports, path=None) -> str:
    """Rejection-rate table with one row per (n, alpha, dgp)."""
    if isinstance(reports, McReport):
        reports = [reports]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        for row in report.rows:
            writer.writerow([
                row.n, _float(row.alpha), row.dgp, row.variant,
                _float(row.rejection_rate), row.replications, row.B, row.seed,
            ])
    text = buf.getvalue()
    if path:
        Path(path).write_text(text, encoding="utf-8")
    return text
