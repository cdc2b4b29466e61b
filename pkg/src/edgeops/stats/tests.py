"""Rank-based hypothesis tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats as sps

from ..errors import StatsError

ALPHA = 0.05
EXACT_MAX_N = 25


@dataclass(frozen=True)
class StatTestResult:
    statistic: float
    p_value: float
    method: str
    df: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise StatsError(f"p-value {self.p_value} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "method": self.method, "df": self.df}


def _clip(p: float) -> float:
    return float(min(1.0, max(0.0, p)))


def _check_groups(groups) -> list[np.ndarray]:
    gs = [np.asarray(g, dtype=float) for g in groups]
    if len(gs) < 2:
        raise StatsError("need at least two groups")
    if any(len(g) < 2 for g in gs):
        raise StatsError("each group needs at least two values")
    return gs


def kruskal_wallis(groups) -> StatTestResult:
    gs = _check_groups(groups)
    df = len(gs) - 1
    pooled = np.concatenate(gs)
    if np.all(pooled == pooled[0]):
        return StatTestResult(0.0, 1.0, "kruskal-wallis", df)
    h, p = sps.kruskal(*gs)
    h = max(float(h), 0.0)
    return StatTestResult(h, _clip(p), "kruskal-wallis", df)


def holm(pvals) -> list[float]:
    """Holm step-down adjustment, monotone and capped at 1."""
    p = np.asarray(pvals, dtype=float)
    m = len(p)
    order = np.argsort(p, kind="stable")
    adj = np.empty(m)
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, (m - rank) * p[i])
        adj[i] = min(1.0, running)
    return adj.tolist()


def conover_posthoc(groups) -> list[list[float]]:
    """Conover-Iman pairwise test on pooled ranks, Holm-adjusted; symmetric, unit diagonal."""
    gs = _check_groups(groups)
    k = len(gs)
    sizes = np.array([len(g) for g in gs])
    n = int(sizes.sum())
    ranks = sps.rankdata(np.concatenate(gs))
    bounds = np.cumsum(np.concatenate([[0], sizes]))
    mean_rank = np.array([ranks[bounds[i]:bounds[i + 1]].mean() for i in range(k)])
    s2 = (np.sum(ranks**2) - n * (n + 1) ** 2 / 4.0) / (n - 1)
    h = kruskal_wallis(gs).statistic
    pairs = list(combinations(range(k), 2))
    raw = []
    for i, j in pairs:
        diff = abs(mean_rank[i] - mean_rank[j])
        denom2 = s2 * (n - 1 - h) / (n - k) * (1.0 / sizes[i] + 1.0 / sizes[j])
        if diff == 0:
            raw.append(1.0)
        elif denom2 <= 0:
            raw.append(0.0)
        else:
            t = diff / math.sqrt(denom2)
            raw.append(float(2 * sps.t.sf(t, n - k)))
    adj = holm(raw)
    mat = [[1.0] * k for _ in range(k)]
    for (i, j), p in zip(pairs, adj):
        mat[i][j] = mat[j][i] = p
    return mat


def _signed_rank_parts(paired):
    d = np.array([float(x) - float(y) for x, y in paired])
    d = d[d != 0]
    if len(d) < 6:
        raise StatsError(f"need at least 6 nonzero differences, got {len(d)}")
    ranks = sps.rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    return d, ranks, t_plus


def _exact_p(ranks: np.ndarray, t_plus: float) -> float:
    """Two-sided p by counting sign assignments; ranks doubled so midranks stay integral."""
    r2 = np.rint(ranks * 2).astype(int)
    total = int(r2.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    t2 = int(round(t_plus * 2))
    n_all = 2 ** len(r2)
    lower = sum(counts[: t2 + 1])
    upper = sum(counts[t2:])
    return _clip(2 * min(lower, upper) / n_all)


def wilcoxon_signed_rank(paired, exact: bool | None = None) -> StatTestResult:
    """Zero differences are dropped; exact enumeration up to 25 pairs, normal approximation
    (tie and continuity corrected) above."""
    d, ranks, t_plus = _signed_rank_parts(paired)
    n = len(d)
    t_minus = n * (n + 1) / 2.0 - t_plus
    stat = min(t_plus, t_minus)
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact:
        return StatTestResult(stat, _exact_p(ranks, t_plus), "wilcoxon-exact")
    res = sps.wilcoxon(d, zero_method="wilcox", correction=True, method="approx")
    return StatTestResult(stat, _clip(res.pvalue), "wilcoxon-normal")


def bonferroni(p: float, m: int) -> tuple[float, bool]:
    if m < 1:
        raise StatsError("number of comparisons must be at least 1")
    return min(1.0, p * m), p <= bonferroni_threshold(m)


def bonferroni_threshold(m: int, alpha: float = ALPHA) -> float:
    return alpha / m
