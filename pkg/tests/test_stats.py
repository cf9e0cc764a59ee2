import itertools
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special
from scipy import stats as sps
from sklearn.metrics import f1_score

from hitsc.bench import FoldResult
from hitsc.data import DomainError
from hitsc.stats import (
    RankTable,
    StatReport,
    average_ranks,
    cd_diagram_svg,
    chi2_sf,
    compare_methods,
    f1_macro,
    find_cliques,
    friedman_test,
    gammaincc,
    holm_adjust,
    rank_descending,
    wilcoxon_signed_rank,
)


def enumerate_wilcoxon(d):
    """Two-sided p by listing all 2**n sign patterns of the ranked |d| (zeros dropped)."""
    d = np.asarray([x for x in d if x != 0], dtype=float)
    n = len(d)
    if n == 0:
        return 1.0
    ranks = sps.rankdata(np.abs(d))
    observed = ranks[d > 0].sum()
    le = ge = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        le += w <= observed + 1e-9
        ge += w >= observed - 1e-9
    return min(1.0, 2 * min(le, ge) / 2 ** n)


# -- F1 ---------------------------------------------------------------------------

def test_f1_examples():
    assert f1_macro([0, 1, 2], [0, 1, 2], 3) == 1.0
    assert f1_macro([0, 0, 1, 1, 2, 2], [0] * 6, 3) == pytest.approx(1 / 6, rel=1e-12)
    with pytest.raises(DomainError):
        f1_macro([0, 3], [0, 0], 3)
    with pytest.raises(DomainError):
        f1_macro([], [], 3)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 6), st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=40))
def test_f1_matches_sklearn_and_permutation(c, pairs):
    yt = np.array([a % c for a, _ in pairs])
    yp = np.array([b % c for _, b in pairs])
    want = f1_score(yt, yp, labels=list(range(c)), average="macro", zero_division=0)
    got = f1_macro(yt, yp, c)
    assert got == pytest.approx(want, abs=1e-12)
    assert 0.0 <= got <= 1.0
    sigma = np.roll(np.arange(c), 1)
    assert f1_macro(sigma[yt], sigma[yp], c) == pytest.approx(got, abs=1e-12)


def test_f1_equals_accuracy_for_balanced_bijection():
    yt = np.repeat([0, 1, 2], 4)
    yp = yt.copy()
    yp[[0, 4, 8]] = [1, 2, 0]  # one error per class, cyclic
    assert f1_macro(yt, yp, 3) == pytest.approx(np.mean(yt == yp), rel=1e-12)


# -- ranks ----------------------------------------------------------------------

def test_rank_examples():
    assert rank_descending([0.9, 0.8, 0.7]).tolist() == [1, 2, 3]
    assert rank_descending([0.9, 0.9, 0.7]).tolist() == [1.5, 1.5, 3]


def _records(table):
    out = []
    for d, row in table.items():
        for m, scores in row.items():
            out += [FoldResult(d, m, f, s) for f, s in enumerate(scores)]
    return out


def test_average_ranks_means_folds_then_ranks():
    res = _records({
        "d1": {"a": [1.0, 0.0], "b": [0.6, 0.6]},   # means 0.5 vs 0.6
        "d2": {"a": [0.9, 0.9], "b": [0.1, 0.2]},
    })
    t = average_ranks(res)
    assert t.methods == ("a", "b") and t.datasets == ("d1", "d2")
    assert t.ranks.tolist() == [[2, 1], [1, 2]]
    np.testing.assert_allclose(t.ranks.sum(axis=1), 3.0, atol=1e-9)


def test_average_ranks_incomplete_block():
    res = _records({"d1": {"a": [0.5], "b": [0.4]}, "d2": {"a": [0.5]}})
    with pytest.raises(DomainError, match="d2/b"):
        average_ranks(res)
    res = _records({"d1": {"a": [0.5], "b": [math.nan]}})
    with pytest.raises(DomainError, match="d1/b"):
        average_ranks(res)


# -- Friedman -----------------------------------------------------------------------

def test_friedman_examples():
    t = RankTable.from_scores(["a", "b"], list("0123456789"), [[0.9, 0.1]] * 10)
    stat, p = friedman_test(t)
    assert stat == pytest.approx(10.0, rel=1e-12)
    assert p == pytest.approx(sps.chi2.sf(10.0, 1), rel=1e-9)
    assert p == pytest.approx(0.001565402258002549, rel=1e-9)
    tied = RankTable.from_scores(list("abc"), ["x", "y"], [[0.5] * 3] * 2)
    assert friedman_test(tied) == (0.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 20), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_friedman_against_rank_sum_recomputation(N, k, seed):
    rng = np.random.default_rng(seed)
    scores = rng.integers(0, 4, size=(N, k)) / 4.0  # many ties
    t = RankTable.from_scores([f"m{j}" for j in range(k)], [f"d{i}" for i in range(N)], scores)
    R = np.sum([sps.rankdata(-row) for row in scores], axis=0)
    want = 12.0 / (N * k * (k + 1)) * np.sum(R ** 2) - 3 * N * (k + 1)
    stat, p = friedman_test(t)
    assert stat == pytest.approx(want, rel=1e-9, abs=1e-9)
    assert p == pytest.approx(sps.chi2.sf(max(want, 0), k - 1), rel=1e-9, abs=1e-300)
    perm = rng.permutation(k)
    tp = RankTable.from_scores([t.methods[j] for j in perm], t.datasets, scores[:, perm])
    assert friedman_test(tp)[0] == pytest.approx(stat, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 7.0, 30.0])
@pytest.mark.parametrize("x", [1e-3, 0.5, 2.0, 9.0, 40.0, 120.0])
def test_gammaincc_against_scipy(a, x):
    want = special.gammaincc(a, x)
    assert gammaincc(a, x) == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_chi2_sf_edges():
    assert chi2_sf(0.0, 3) == 1.0
    assert chi2_sf(-1.0, 3) == 1.0


# -- Wilcoxon ---------------------------------------------------------------------------

def test_wilcoxon_examples():
    assert wilcoxon_signed_rank([1, 2, 3, 4, 5], [0] * 5) == 0.0625
    assert wilcoxon_signed_rank([0.3, 0.4], [0.3, 0.4]) == 1.0
    with pytest.raises(DomainError):
        wilcoxon_signed_rank([1, 2], [1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=10))
def test_wilcoxon_exact_matches_enumeration(diffs):
    d = np.array(diffs, dtype=float)
    p = wilcoxon_signed_rank(d, np.zeros_like(d))
    assert p == enumerate_wilcoxon(d)
    assert wilcoxon_signed_rank(np.zeros_like(d), d) == p


@pytest.mark.parametrize("n", [26, 40, 80])
def test_wilcoxon_normal_approximation_against_scipy(n):
    rng = np.random.default_rng(n)
    a = np.round(rng.normal(size=n), 1)  # rounding creates ties
    b = np.round(a + rng.normal(0.2, 1, size=n), 1)
    want = sps.wilcoxon(a, b, zero_method="wilcox", correction=True, method="approx").pvalue
    assert wilcoxon_signed_rank(a, b, exact_max_n=0) == pytest.approx(want, rel=1e-9)
    want_pratt = sps.wilcoxon(a, b, zero_method="pratt", correction=True, method="approx").pvalue
    assert wilcoxon_signed_rank(a, b, zero_method="pratt", exact_max_n=0) == pytest.approx(want_pratt, rel=1e-9)


def test_wilcoxon_exact_threshold_configurable():
    d = np.arange(1, 11, dtype=float)
    exact = wilcoxon_signed_rank(d, np.zeros(10))
    approx = wilcoxon_signed_rank(d, np.zeros(10), exact_max_n=5)
    assert exact == 2 / 1024
    assert approx != exact and approx < 0.01


# -- Holm ------------------------------------------------------------------------------

def holm_loop(p):
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    out = [0.0] * m
    running = 0.0
    for j, i in enumerate(order):
        running = max(running, min(1.0, (m - j) * p[i]))
        out[i] = running
    return out


def test_holm_examples():
    np.testing.assert_allclose(holm_adjust([0.01, 0.04, 0.03]), [0.03, 0.06, 0.06], rtol=1e-12)
    assert holm_adjust([0.7]).tolist() == [0.7]
    with pytest.raises(DomainError):
        holm_adjust([0.5, 1.5])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=15))
def test_holm_against_loop(p):
    adj = holm_adjust(p)
    np.testing.assert_allclose(adj, holm_loop(p), rtol=1e-12, atol=0)
    assert np.all(adj >= np.array(p))
    s = adj[np.argsort(p, kind="stable")]
    assert np.all(np.diff(s) >= 0)


# -- cliques and diagram -------------------------------------------------------------------

def test_clique_examples():
    assert find_cliques(["a", "b"], [1.0, 2.0], [("a", "b")]) == []
    assert find_cliques(["a", "b"], [1.0, 2.0], []) == [("a", "b")]
    assert find_cliques(["A", "B", "C"], [1.0, 2.0, 3.0], [("A", "C")]) == [("A", "B"), ("B", "C")]


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 7), st.data())
def test_cliques_maximal_and_clean(k, data):
    methods = [f"m{i}" for i in range(k)]
    ranks = list(range(1, k + 1))
    pairs = list(itertools.combinations(methods, 2))
    sig = [p for p in pairs if data.draw(st.booleans())]
    sigset = {frozenset(p) for p in sig}
    cliques = find_cliques(methods, ranks, sig)
    for c in cliques:
        assert all(frozenset(p) not in sigset for p in itertools.combinations(c, 2))
        idx = [methods.index(m) for m in c]
        assert idx == list(range(idx[0], idx[-1] + 1))
    for a, b in itertools.permutations(cliques, 2):
        assert not set(a) <= set(b)
    # every non-significant adjacent pair is covered by some clique
    for i in range(k - 1):
        if frozenset((methods[i], methods[i + 1])) not in sigset:
            assert any({methods[i], methods[i + 1]} <= set(c) for c in cliques)


def _report(methods, ranks, pairwise=(), cliques=()):
    return StatReport(tuple(methods), tuple(ranks), 0.0, 1.0, tuple(pairwise), tuple(cliques))


def test_cd_diagram_well_formed_and_bars():
    svg = cd_diagram_svg(_report(["a", "b", "c<&>"], [1.2, 2.0, 2.8], cliques=[("a", "b"), ("b", "c<&>")]))
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    assert len([e for e in root.iter(ns + "line") if e.get("class") == "clique"]) == 2
    labels = [e.text for e in root.iter(ns + "text") if e.get("class") == "method"]
    assert labels == ["a (1.20)", "b (2.00)", "c<&> (2.80)"]
    # best method sits at the right
    xs = {e.text.split(" ")[0]: float(e.get("x")) for e in root.iter(ns + "text") if e.get("class") == "method"}
    assert xs["a"] > xs["c<&>"]
    assert cd_diagram_svg(_report(["a", "b"], [1.0, 2.0])) == cd_diagram_svg(_report(["a", "b"], [1.0, 2.0]))
    with pytest.raises(DomainError):
        cd_diagram_svg(_report(["a"], [1.0]))


def test_compare_methods_two_methods():
    scores = np.array([[0.9, 0.5]] * 6)
    t = RankTable.from_scores(["good", "bad"], [f"d{i}" for i in range(6)], scores)
    rep = compare_methods(t)
    assert len(rep.pairwise) == 1
    pr = rep.pairwise[0]
    assert pr.wilcoxon_p == 2 / 64 and pr.holm_adjusted_p == pr.wilcoxon_p and pr.significant
    assert rep.cliques == ()
    assert "cliques" in rep.to_json()
    loose = compare_methods(RankTable.from_scores(["a", "b"], ["x", "y"], [[0.9, 0.5], [0.5, 0.9]]))
    assert loose.pairwise[0].holm_adjusted_p == 1.0 and len(loose.cliques) == 1
