import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from edgeops.errors import StatsError
from edgeops.stats import (Magnitude, bonferroni, bonferroni_threshold, cliffs_delta,
                           conover_posthoc, holm, kruskal_wallis, load_accuracy_fixture, magnitude,
                           mean_iou, top_k_accuracy, wilcoxon_signed_rank)
from edgeops.stats.analyze import accuracy_comparisons, compare_groups
from edgeops.stats.effect import cliffs_delta_brute
from edgeops.stats.fixture import OPERATOR_ORDER

FX = load_accuracy_fixture()


def kw_oracle(groups):
    """Untied rank-sum formula evaluated by hand."""
    pooled = sorted(x for g in groups for x in g)
    rank = {v: i + 1 for i, v in enumerate(pooled)}
    n = len(pooled)
    s = sum(sum(rank[x] for x in g) ** 2 / len(g) for g in groups)
    return 12 / (n * (n + 1)) * s - 3 * (n + 1)


def wilcoxon_oracle(d):
    """Two-sided exact p by brute-force enumeration of every sign pattern."""
    ranks = sps.rankdata(np.abs(d))
    t_obs = ranks[np.asarray(d) > 0].sum()
    mean = ranks.sum() / 2
    hits = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        t = sum(r for r, s in zip(ranks, signs) if s)
        hits += abs(t - mean) >= abs(t_obs - mean) - 1e-9
    return hits / 2 ** len(d)


# -- Kruskal-Wallis and Conover

def test_kw_identical_groups():
    r = kruskal_wallis([[1, 2, 3]] * 3)
    assert (r.statistic, r.p_value, r.df) == (0.0, 1.0, 2)
    r = kruskal_wallis([[4, 4], [4, 4, 4]])
    assert (r.statistic, r.p_value) == (0.0, 1.0)


def test_kw_untied_example():
    groups = [[1, 2, 3], [4, 5, 6], [7, 8, 9]]
    r = kruskal_wallis(groups)
    assert r.statistic == pytest.approx(7.2) == kw_oracle(groups)
    assert r.df == 2
    assert r.p_value == pytest.approx(np.exp(-3.6))


def test_kw_errors():
    with pytest.raises(StatsError):
        kruskal_wallis([[1, 2, 3]])
    with pytest.raises(StatsError):
        kruskal_wallis([[1], [2, 3]])


def test_kw_agrees_with_mann_whitney():
    rng = np.random.default_rng(0)
    agree = 0
    for _ in range(200):
        a = rng.normal(0, 1, rng.integers(8, 30))
        b = rng.normal(rng.uniform(0, 1.2), 1, rng.integers(8, 30))
        kw = kruskal_wallis([a, b]).p_value <= 0.05
        mw = sps.mannwhitneyu(a, b, alternative="two-sided").pvalue <= 0.05
        agree += kw == mw
    assert agree >= 190


def test_conover_identical():
    m = conover_posthoc([[1, 2, 3, 4]] * 3)
    assert m == [[1.0] * 3] * 3


def test_conover_separated():
    m = np.array(conover_posthoc([range(1, 6), range(101, 106), range(201, 206)]))
    assert np.allclose(m, m.T) and np.all(np.diag(m) == 1)
    assert np.all(m[~np.eye(3, dtype=bool)] < 0.05)


def test_conover_one_shifted():
    rng = np.random.default_rng(3)
    a, b = rng.normal(0, 1, 20), rng.normal(0, 1, 20)
    c = rng.normal(8, 1, 20)
    m = conover_posthoc([a, b, c])
    assert m[0][1] > 0.05 and m[0][2] < 0.05 and m[1][2] < 0.05


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_holm_properties(p):
    adj = holm(p)
    assert all(a >= x - 1e-15 and a <= 1 for a, x in zip(adj, p))
    order = np.argsort(p, kind="stable")
    sorted_adj = [adj[i] for i in order]
    assert sorted_adj == sorted(sorted_adj)


# -- Cliff's delta

def test_cliffs_examples():
    e = cliffs_delta([1, 2, 3], [3, 2, 1])
    assert (e.d, e.magnitude) == (0.0, Magnitude.NEGLIGIBLE)
    e = cliffs_delta([5, 6], [1, 2, 3])
    assert (e.d, e.magnitude) == (1.0, Magnitude.LARGE)
    assert cliffs_delta([1, 2, 3], [5, 6]).d == -1.0
    with pytest.raises(StatsError):
        cliffs_delta([], [1])


def test_cliffs_fast_equals_brute_1000_cases():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        a = rng.integers(0, 10, rng.integers(1, 30)).tolist()
        b = rng.integers(0, 10, rng.integers(1, 30)).tolist()
        assert cliffs_delta(a, b).d == pytest.approx(cliffs_delta_brute(a, b), abs=1e-12)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40),
       st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_cliffs_antisymmetric(a, b):
    d = cliffs_delta(a, b).d
    assert -1 <= d <= 1
    assert cliffs_delta(b, a).d == pytest.approx(-d)


def test_hess_boundaries():
    eps = 1e-9
    assert magnitude(0.147 - eps) == Magnitude.NEGLIGIBLE
    assert magnitude(0.147) == Magnitude.SMALL
    assert magnitude(0.33 - eps) == Magnitude.SMALL
    assert magnitude(0.33) == Magnitude.MEDIUM
    assert magnitude(0.474 - eps) == Magnitude.MEDIUM
    assert magnitude(0.474) == Magnitude.LARGE
    assert magnitude(-0.474) == Magnitude.LARGE
    assert magnitude(0.0) == Magnitude.NEGLIGIBLE


@given(st.floats(-1, 1))
def test_magnitude_is_threshold_function(d):
    a = abs(d)
    want = (Magnitude.NEGLIGIBLE if a < 0.147 else Magnitude.SMALL if a < 0.33
            else Magnitude.MEDIUM if a < 0.474 else Magnitude.LARGE)
    assert magnitude(d) == want


# -- Wilcoxon and Bonferroni

def test_wilcoxon_same_sign():
    pairs = [(k + 1.0, 0.0) for k in range(18)]
    r = wilcoxon_signed_rank(pairs)
    assert r.p_value == 2 / 2**18
    assert r.statistic == 0.0 and r.method == "wilcoxon-exact"


def test_wilcoxon_symmetric_differences():
    pairs = [(d, 0.0) for k in range(1, 5) for d in (k, -k)]
    assert wilcoxon_signed_rank(pairs).p_value == 1.0


def test_wilcoxon_drops_zeros():
    pairs = [(1.0, 1.0)] * 5 + [(k + 1.0, 0.0) for k in range(6)]
    assert wilcoxon_signed_rank(pairs).p_value == 2 / 2**6
    with pytest.raises(StatsError):
        wilcoxon_signed_rank([(1.0, 1.0)] * 5 + [(2.0, 1.0)] * 5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-6, 6).filter(lambda x: x != 0), min_size=6, max_size=12))
def test_wilcoxon_exact_matches_enumeration(diffs):
    r = wilcoxon_signed_rank([(float(d), 0.0) for d in diffs])
    assert r.p_value == pytest.approx(min(1.0, wilcoxon_oracle(diffs)), abs=1e-12)


def test_wilcoxon_exact_vs_normal_at_25():
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = rng.normal(rng.uniform(0, 0.8), 1, 25)
        pairs = [(v, 0.0) for v in x]
        ex = wilcoxon_signed_rank(pairs, exact=True).p_value
        ap = wilcoxon_signed_rank(pairs, exact=False).p_value
        assert abs(ex - ap) <= 0.01


def test_bonferroni():
    assert bonferroni_threshold(4) == 0.0125
    assert bonferroni(0.01, 4) == (0.04, True)
    assert bonferroni(0.02, 4) == (0.08, False)
    assert bonferroni(0.05, 1) == (0.05, True)
    assert bonferroni(0.5, 4)[0] == 1.0
    with pytest.raises(StatsError):
        bonferroni(0.1, 0)


# -- metrics

def test_top_k():
    assert top_k_accuracy([[1, 2, 3, 4, 5]] * 2, [1, 1], 1) == 100.0
    ranked = [[9, 8, 7, 6, 5]] * 3
    assert top_k_accuracy(ranked, [7] * 3, 1) == 0.0
    assert top_k_accuracy(ranked, [7] * 3, 5) == 100.0
    assert top_k_accuracy([[1, 2], [1, 2], [1, 2], [1, 2]], [1, 2, 1, 3], 2) == 75.0
    with pytest.raises(StatsError):
        top_k_accuracy([[1]], [1, 2], 1)
    with pytest.raises(StatsError):
        top_k_accuracy([[1]], [1], 2)


def test_mean_iou():
    m = np.array([[0, 1], [1, 2]])
    assert mean_iou(m, m, 3) == 100.0
    assert mean_iou(np.zeros((2, 2), int), np.ones((2, 2), int), 2) == 0.0
    truth = np.array([[0, 0], [1, 1]])
    pred = np.array([[0, 1], [0, 1]])
    assert mean_iou(pred, truth, 2) == pytest.approx(100 / 3)
    # absent class 2 is ignored rather than counted as zero
    assert mean_iou(pred, truth, 3) == pytest.approx(100 / 3)
    with pytest.raises(StatsError):
        mean_iou(pred, truth[:1], 2)


# -- fixture

def test_fixture_sanity():
    for subj, ops in FX.subjects.items():
        for op in OPERATOR_ORDER:
            for metric in FX.metrics:
                if metric in ops[op]:
                    v = ops[op][metric]
                    assert v[0] == v[1], (subj, op, metric)
        for metric in FX.metrics:
            if metric not in ops["IDENTITY"]:
                continue
            for t in FX.tiers:
                ident, q, qe, ee = (FX.value(subj, o, t, metric) for o in OPERATOR_ORDER[:1] + (
                    "QUANTIZED", "QE", "EARLY_EXIT"))
                assert ident >= q >= qe and ident >= ee


def test_fixture_groups_have_18_values():
    for op in OPERATOR_ORDER:
        assert len(FX.group(op)) == 18


def test_fixture_identity_vs_quantized():
    a, b = FX.group("IDENTITY"), FX.group("QUANTIZED")
    w = wilcoxon_signed_rank(list(zip(a, b)))
    assert w.p_value == 2 / 2**18
    e = cliffs_delta(a, b)
    assert e.d == pytest.approx(cliffs_delta_brute(a, b))
    assert e.d == pytest.approx(0.16, abs=0.05) and e.magnitude == Magnitude.SMALL


def test_accuracy_comparisons_block():
    rows = {(r["a"], r["b"]): r for r in accuracy_comparisons(FX)}
    assert len(rows) == 6
    for key in (("IDENTITY", "EARLY_EXIT"), ("QUANTIZED", "EARLY_EXIT")):
        d = rows[key]["cliffs_delta"]
        assert d["magnitude"] == "MEDIUM" and d["d"] == pytest.approx(0.38, abs=0.07)
    r = rows[("IDENTITY", "QUANTIZED")]
    assert r["bonferroni"]["threshold"] == 0.0125 and r["bonferroni"]["significant"]
    json.dumps(rows[key])


def test_compare_groups_shape():
    c = compare_groups("x", "S", "tier", ["M", "E"], [[1, 2, 3], [4, 5, 6]])
    assert c["cliffs_delta"] == [[0.0, -1.0], [1.0, 0.0]]
    assert c["magnitude"] == [["", "LARGE"], ["LARGE", ""]]
    assert c["medians_s"] == [2.0, 5.0]
