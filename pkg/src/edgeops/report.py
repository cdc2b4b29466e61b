"""Render ``stats.json`` as markdown or CSV tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

from .errors import StatsError
from .stats.analyze import OPS, SCHEMA, TIER_ORDER
from .stats.effect import Magnitude
from .stats.fixture import OPERATOR_ORDER, SUBJECT_ORDER, AccuracyFixture, load_accuracy_fixture

EFFECT_NOTE = ("A positive sign in cell (row i, column j) means the latency of column j is lower "
               "than that of row i. Letters: N negligible, S small, M medium, L large. "
               "A blank cell means the post-hoc difference is not significant.")


class TableKind(str, Enum):
    MEDIANS = "MEDIANS"
    SPEEDUPS = "SPEEDUPS"
    EFFECT_MATRIX = "EFFECT_MATRIX"
    ACCURACY = "ACCURACY"


@dataclass
class ReportTable:
    kind: TableKind
    title: str
    cols: list[str]
    rows: list[str] = field(default_factory=list)
    cells: list[list[str]] = field(default_factory=list)
    corner: str = ""


def _num(x: float, digits: int = 4) -> str:
    return f"{x:.{digits}f}"


def _check(stats: dict) -> None:
    if not isinstance(stats, dict):
        raise StatsError("stats document must be a JSON object")
    if stats and stats.get("schema") != SCHEMA:
        raise StatsError(f"unknown stats schema {stats.get('schema')!r}")
    for key, typ in (("cells", dict), ("comparisons", list), ("accuracy", dict)):
        if key in stats and not isinstance(stats[key], typ):
            raise StatsError(f"stats field {key!r} has the wrong type")


def medians_table(stats: dict) -> ReportTable:
    cells = stats.get("cells", {})
    strategies = sorted({(c["operator"], c["tier"]) for c in cells.values()},
                        key=lambda s: (OPS.index(s[0]) if s[0] in OPS else 99, TIER_ORDER.index(s[1])))
    subjects = sorted({c["subject"] for c in cells.values()},
                      key=lambda s: (SUBJECT_ORDER.index(s) if s in SUBJECT_ORDER else 99, s))
    t = ReportTable(TableKind.MEDIANS, "Median latency (s)", [f"{o}@{tr}" for o, tr in strategies],
                    corner="subject")
    by = {(c["subject"], c["operator"], c["tier"]): c["median_s"] for c in cells.values()}
    for s in subjects:
        t.rows.append(s)
        t.cells.append([_num(by[(s, o, tr)]) if (s, o, tr) in by else "" for o, tr in strategies])
    return t


def speedup_table(cmp: dict) -> ReportTable:
    labels = cmp["labels"]
    med = cmp["medians_s"]
    t = ReportTable(TableKind.SPEEDUPS, f"{cmp['id']} speedup of column over row", labels,
                    list(labels), corner="row/col")
    for i in range(len(labels)):
        t.cells.append(["" if i == j else _num(med[i] / med[j], 2) for j in range(len(labels))])
    return t


def effect_cell(d: float, mag: str, p: float, alpha: float) -> str:
    if p >= alpha:
        return ""
    sign = "+" if d > 0 else "-" if d < 0 else ""
    return sign + Magnitude(mag).symbol


def effect_table(cmp: dict, alpha: float = 0.05) -> ReportTable:
    labels = cmp["labels"]
    t = ReportTable(TableKind.EFFECT_MATRIX, f"{cmp['id']} effect sizes", labels, list(labels),
                    corner="row/col")
    for i in range(len(labels)):
        t.cells.append(["" if i == j else effect_cell(cmp["cliffs_delta"][i][j], cmp["magnitude"][i][j],
                                                      cmp["posthoc_p"][i][j], alpha)
                        for j in range(len(labels))])
    return t


def accuracy_table(fx: AccuracyFixture) -> ReportTable:
    cols = ["size_mb"] + [f"{m}_{tier}" for m in fx.metrics for tier in fx.tiers]
    t = ReportTable(TableKind.ACCURACY, "Accuracy (%) and model size (MB)", cols,
                    corner="subject/operator")
    for s in fx.subject_names():
        ops = [o for o in OPERATOR_ORDER if o in fx.subjects[s]]
        for o in ops:
            row = fx.subjects[s][o]
            vals = [f"{row['size_mb']:g}"]
            for m in fx.metrics:
                vals += [f"{v:g}" for v in row[m]] if m in row else [""] * len(fx.tiers)
            t.rows.append(f"{s}/{o}")
            t.cells.append(vals)
    return t


def build_tables(stats: dict) -> list[ReportTable]:
    _check(stats)
    alpha = float(stats.get("alpha", 0.05))
    tables = [medians_table(stats)]
    comps = stats.get("comparisons", [])
    tables += [speedup_table(c) for c in comps]
    tables += [effect_table(c, alpha) for c in comps]
    if not comps:
        tables.append(ReportTable(TableKind.SPEEDUPS, "Speedups", [], corner="row/col"))
        tables.append(ReportTable(TableKind.EFFECT_MATRIX, "Effect sizes", [], corner="row/col"))
    acc = stats.get("accuracy", {}).get("fixture")
    if acc is not None:
        tables.append(accuracy_table(AccuracyFixture.from_dict(acc)))
    else:
        tables.append(ReportTable(TableKind.ACCURACY, "Accuracy (%) and model size (MB)",
                                  accuracy_table(load_accuracy_fixture()).cols,
                                  corner="subject/operator"))
    return tables


def _md_escape(s: str) -> str:
    return s.replace("|", "\\|")


def render_markdown(tables: list[ReportTable]) -> str:
    out = []
    for t in tables:
        out.append(f"## {t.kind.value}: {t.title}\n")
        if t.kind == TableKind.EFFECT_MATRIX:
            out.append(EFFECT_NOTE + "\n")
        head = [t.corner] + t.cols
        out.append("| " + " | ".join(_md_escape(h) for h in head) + " |")
        out.append("|" + "---|" * len(head))
        for r, row in zip(t.rows, t.cells):
            out.append("| " + " | ".join(_md_escape(x) for x in [r] + row) + " |")
        out.append("")
    return "\n".join(out)


def render_csv(tables: list[ReportTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)         # RFC 4180: minimal quoting, CRLF line ends
    for k, t in enumerate(tables):
        if k:
            w.writerow([])
        w.writerow([t.kind.value, t.title])
        w.writerow([t.corner] + t.cols)
        for r, row in zip(t.rows, t.cells):
            w.writerow([r] + row)
    return buf.getvalue()


def render_report(stats: dict, fmt: str = "md") -> str:
    tables = build_tables(stats)
    if fmt == "md":
        return render_markdown(tables)
    if fmt == "csv":
        return render_csv(tables)
    raise StatsError(f"unknown report format {fmt!r}")
