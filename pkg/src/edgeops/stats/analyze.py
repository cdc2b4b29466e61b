"""From experiment logs and the accuracy fixture to ``stats.json``."""

from __future__ import annotations

import json
from itertools import combinations
from pathlib import Path

from ..errors import StatsError
from ..experiment import median_latency, parse_log_filename, read_log
from .effect import cliffs_delta
from .fixture import OPERATOR_ORDER, SUBJECT_ORDER, AccuracyFixture, load_accuracy_fixture
from .tests import ALPHA, bonferroni, conover_posthoc, kruskal_wallis, wilcoxon_signed_rank

SCHEMA = "edgeops.stats/1"
TIER_ORDER = ("M", "E", "C", "ME", "EC", "MC")
OPS = ("IDENTITY", "QUANTIZED", "EARLY_EXIT", "QE", "PARTITION", "QEP")
BONFERRONI_M = 4        # family size used for the accuracy comparisons


def _order(values, ref):
    return sorted(values, key=lambda v: (ref.index(v) if v in ref else len(ref), v))


def compare_groups(cid: str, subject: str, factor: str, labels: list[str], groups: list) -> dict:
    """Omnibus test, post-hoc matrix and pairwise effect sizes for one family of groups."""
    kw = kruskal_wallis(groups)
    post = conover_posthoc(groups)
    k = len(groups)
    deltas = [[0.0] * k for _ in range(k)]
    mags = [[""] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            if i != j:
                e = cliffs_delta(groups[i], groups[j])
                deltas[i][j] = e.d
                mags[i][j] = e.magnitude.value
    return {"id": cid, "subject": subject, "factor": factor, "labels": labels,
            "medians_s": [median_latency(g) for g in groups],
            "kruskal_wallis": kw.to_dict(), "posthoc_p": post,
            "cliffs_delta": deltas, "magnitude": mags}


def latency_comparisons(cells: dict) -> list[dict]:
    """Per subject: each operator across its tiers, and each single tier across operators."""
    out = []
    subjects = _order({c["subject"] for c in cells.values()}, SUBJECT_ORDER)
    for subj in subjects:
        mine = {k: c for k, c in cells.items() if c["subject"] == subj}
        for op in _order({c["operator"] for c in mine.values()}, OPS):
            cs = [c for c in mine.values() if c["operator"] == op]
            cs = sorted(cs, key=lambda c: TIER_ORDER.index(c["tier"]))
            if len(cs) >= 2:
                out.append(compare_groups(f"{subj}/{op}", subj, "tier", [c["tier"] for c in cs],
                                          [c["totals"] for c in cs]))
        for tier in ("M", "E", "C"):
            cs = [c for c in mine.values() if c["tier"] == tier]
            cs = sorted(cs, key=lambda c: OPS.index(c["operator"]))
            if len(cs) >= 2:
                out.append(compare_groups(f"{subj}@{tier}", subj, "operator",
                                          [c["operator"] for c in cs], [c["totals"] for c in cs]))
    return out


def accuracy_comparisons(fx: AccuracyFixture, m: int = BONFERRONI_M) -> list[dict]:
    out = []
    ops = [o for o in OPERATOR_ORDER if all(o in fx.subjects[s] for s in fx.subjects)]
    for a, b in combinations(ops, 2):
        ga, gb = fx.group(a), fx.group(b)
        w = wilcoxon_signed_rank(list(zip(ga, gb)))
        adj, sig = bonferroni(w.p_value, m)
        e = cliffs_delta(ga, gb)
        out.append({"a": a, "b": b, "n": len(ga), "wilcoxon": w.to_dict(),
                    "bonferroni": {"m": m, "adjusted_p": adj, "significant": sig,
                                   "threshold": ALPHA / m},
                    "cliffs_delta": e.to_dict()})
    return out


def load_cells(paths) -> dict:
    cells = {}
    for p in sorted(Path(x) for x in paths):
        subj, op, tier = parse_log_filename(p)
        log = read_log(p)
        if not log.measured:
            raise StatsError(f"{p.name}: no measured runs")
        cells[f"{subj}.{op}.{tier}"] = {"subject": subj, "operator": op, "tier": tier,
                                        "totals": log.totals, "rep_medians_s": log.rep_medians()}
    return cells


def analyze(log_paths, fixture: AccuracyFixture | None = None) -> dict:
    fixture = fixture or load_accuracy_fixture()
    cells = load_cells(log_paths)
    summary = {k: {"subject": c["subject"], "operator": c["operator"], "tier": c["tier"],
                   "median_s": median_latency(c["totals"]), "rep_medians_s": c["rep_medians_s"],
                   "n": len(c["totals"])}
               for k, c in sorted(cells.items())}
    return {"schema": SCHEMA, "alpha": ALPHA, "cells": summary,
            "comparisons": latency_comparisons(cells),
            "accuracy": {"fixture": fixture.to_dict(), "comparisons": accuracy_comparisons(fixture)}}


def dumps_stats(stats: dict) -> str:
    return json.dumps(stats, indent=1, sort_keys=True) + "\n"
