import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import stats

from gxesym.core import CaseControlData
from gxesym.diagnostics import PrsWeights, bh_qvalues, independence_screen, polygenic_score
from gxesym.errors import DataError, DegenerateScoreError, DimensionError, InsufficientData


def hand_bh(p):
    """Step-up BH written out directly: q_(i) = min_{j>=i} m p_(j) / j."""
    p = np.asarray(p, float)
    m = p.size
    order = np.argsort(p)
    q = np.empty(m)
    running = 1.0
    for rank in range(m, 0, -1):
        i = order[rank - 1]
        running = min(running, p[i] * m / rank)
        q[i] = running
    return q


def welch_oracle(a, b):
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    t = (b.mean() - a.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    return t, df, 2 * stats.t.sf(abs(t), df)


def chi2_oracle(table):
    table = np.asarray(table, float)
    e = table.sum(1, keepdims=True) * table.sum(0, keepdims=True) / table.sum()
    stat = float(((table - e) ** 2 / e).sum())
    df = (table.shape[0] - 1) * (table.shape[1] - 1)
    return stat, df, stats.chi2.sf(stat, df)


# ---------------------------------------------------------------------------
# polygenic score


def test_bundled_weights():
    w = PrsWeights.bundled()
    assert len(w) == 21 and len(set(w.ids)) == 21
    assert dict(w.entries)["rs3803662"] == pytest.approx(0.27080105, abs=0)
    assert np.all(np.isfinite(w.coefficients))
    with pytest.raises(KeyError):
        PrsWeights.bundled("missing")


def test_weights_validation():
    with pytest.raises(ValueError, match="duplicate"):
        PrsWeights((("a", 1.0), ("a", 2.0)))
    with pytest.raises(ValueError, match="finite"):
        PrsWeights((("a", float("inf")),))


def test_single_snp_raw_scores():
    w = PrsWeights((("rs3803662", 0.27080105),))
    raw = np.array([0, 1, 2.0]) * w.coefficients[0]
    np.testing.assert_allclose(raw, [0.0, 0.27080105, 0.54160210], atol=1e-15)
    # standardising three equally spaced raw scores gives (-1, 0, 1)
    np.testing.assert_allclose(polygenic_score([[0], [1], [2]], w), [-1, 0, 1], atol=1e-12)


def test_score_standardised():
    rng = np.random.default_rng(0)
    geno = rng.integers(0, 3, size=(300, 21))
    s = polygenic_score(geno)
    assert abs(s.mean()) < 1e-12 and abs(s.std(ddof=1) - 1) < 1e-12
    raw = geno @ PrsWeights.bundled().coefficients
    assert np.corrcoef(raw, s)[0, 1] == pytest.approx(1.0, abs=1e-12)


def test_score_errors():
    with pytest.raises(DegenerateScoreError):
        polygenic_score(np.ones((10, 21)))
    with pytest.raises(DimensionError):
        polygenic_score(np.ones((10, 3)))


@given(hnp.arrays(np.int8, st.tuples(st.integers(3, 40), st.just(4)), elements=st.integers(0, 2)))
def test_score_standardisation_property(geno):
    w = PrsWeights((("a", 0.1), ("b", -0.3), ("c", 0.25), ("d", 0.05)))
    raw = geno @ w.coefficients
    if raw.std() < 1e-9:
        with pytest.raises(DegenerateScoreError):
            polygenic_score(geno, w)
        return
    s = polygenic_score(geno, w)
    assert abs(s.mean()) < 1e-9 and abs(s.std(ddof=1) - 1) < 1e-9


# ---------------------------------------------------------------------------
# BH


def test_bh_hand_example():
    np.testing.assert_allclose(bh_qvalues([0.01, 0.02, 0.03, 0.04]), [0.04] * 4, atol=1e-15)


def test_bh_matches_step_up_oracle():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p = rng.uniform(size=rng.integers(1, 30)) ** 2
        np.testing.assert_allclose(bh_qvalues(p), hand_bh(p), rtol=1e-12)


@given(hnp.arrays(np.float64, st.integers(1, 50), elements=st.floats(0, 1)))
def test_bh_monotone_and_bounded(p):
    q = bh_qvalues(p)
    order = np.argsort(p, kind="stable")
    assert np.all(np.diff(q[order]) >= -1e-15)
    assert np.all(q <= 1) and np.all(q >= p - 1e-15)


# ---------------------------------------------------------------------------
# screen


def _screen_data(rng, n0=400, n1=100, dependent=False):
    g_snp = rng.integers(0, 3, size=n0 + n1).astype(float)
    prs = rng.normal(size=n0 + n1)
    x = (rng.random(n0 + n1) < 0.5).astype(float)
    if dependent:
        x = (prs > np.median(prs)).astype(float)
    d = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    return CaseControlData(d, np.column_stack([g_snp, prs]), x[:, None])


def test_screen_matches_hand_statistics():
    rng = np.random.default_rng(2)
    data = _screen_data(rng)
    rep = independence_screen(data, ["snp", "continuous"])
    ctrl = data.d == 0
    g, x = data.g[ctrl], data.x[ctrl, 0]
    chi_t, welch_t = rep.tests
    table = [[np.sum((g[:, 0] == k) & (x == v)) for v in (0, 1)] for k in range(3)]
    stat, df, p = chi2_oracle(table)
    assert chi_t.test == "chi2" and not chi_t.merged
    assert chi_t.statistic == pytest.approx(stat, rel=1e-10) and chi_t.df == df and chi_t.p == pytest.approx(p, rel=1e-9)
    t, df, p = welch_oracle(g[x == 0, 1], g[x == 1, 1])
    assert welch_t.test == "welch_t"
    assert welch_t.statistic == pytest.approx(t, rel=1e-10)
    assert welch_t.df == pytest.approx(df, rel=1e-10) and welch_t.p == pytest.approx(p, rel=1e-9)
    np.testing.assert_allclose([chi_t.q, welch_t.q], hand_bh([chi_t.p, welch_t.p]))
    assert rep.n_controls == 400 and rep.min_q() == min(chi_t.q, welch_t.q)


def test_screen_null_pvalues_uniform():
    rng = np.random.default_rng(3)
    pvals = [independence_screen(_screen_data(rng, 200, 20), ["snp", "continuous"]).tests[1].p for _ in range(200)]
    assert stats.kstest(pvals, "uniform").pvalue > 0.01


def test_screen_perfect_dependence():
    rep = independence_screen(_screen_data(np.random.default_rng(4), dependent=True), ["snp", "continuous"])
    assert rep.tests[1].p < 1e-6


def test_screen_ignores_case_rows():
    rng = np.random.default_rng(5)
    data = _screen_data(rng)
    g, x = data.g.copy(), data.x.copy()
    cases = data.d == 1
    g[cases] = rng.permutation(g[cases])
    g[cases, 1] *= 100
    x[cases] = 1 - x[cases]
    other = CaseControlData(data.d, g, x)
    a = independence_screen(data, ["snp", "continuous"]).to_dict()
    b = independence_screen(other, ["snp", "continuous"]).to_dict()
    assert a == b


def test_screen_merges_sparse_genotype():
    rng = np.random.default_rng(6)
    n = 200
    g = np.where(rng.random(n) < 0.5, 0.0, 1.0)
    g[:3] = 2.0  # expected counts at genotype 2 well below 5
    x = (rng.random(n) < 0.5).astype(float)
    data = CaseControlData(np.r_[np.zeros(n, int), np.ones(10, int)], np.r_[g, np.zeros(10)][:, None],
                           np.r_[x, np.ones(10)][:, None])
    merged = independence_screen(data).tests[0]
    assert merged.merged and merged.df == 1
    table = [[np.sum((g == 0) & (x == v)) for v in (0, 1)], [np.sum((g >= 1) & (x == v)) for v in (0, 1)]]
    assert merged.statistic == pytest.approx(chi2_oracle(table)[0], rel=1e-10)
    raw = independence_screen(data, merge_small=False).tests[0]
    assert not raw.merged and raw.df == 2


def test_screen_errors():
    rng = np.random.default_rng(7)
    n = 100
    x = np.zeros(n)
    x[:5] = 1
    data = CaseControlData(np.r_[np.zeros(n, int), np.ones(5, int)],
                           rng.integers(0, 3, size=(n + 5, 1)).astype(float), np.r_[x, np.ones(5)][:, None])
    with pytest.raises(InsufficientData):
        independence_screen(data)
    cont = CaseControlData(np.r_[np.zeros(n, int), np.ones(5, int)],
                           rng.integers(0, 3, size=(n + 5, 1)).astype(float), rng.normal(size=(n + 5, 1)))
    with pytest.raises(DataError, match="binary"):
        independence_screen(cont)
    frac = CaseControlData(np.r_[np.zeros(n, int), np.ones(5, int)], rng.normal(size=(n + 5, 1)),
                           (rng.random((n + 5, 1)) < 0.5).astype(float))
    with pytest.raises(DataError, match="0, 1, 2"):
        independence_screen(frac, "snp")
    with pytest.raises(DimensionError):
        independence_screen(frac, ["snp", "snp"])
