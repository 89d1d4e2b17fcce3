import math
from types import SimpleNamespace

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadnet.errors import BothConstantEqual, ConstantInput, LengthMismatch, TooFewPoints, ZeroVariance
from dyadnet.stats import (
    betainc,
    group_summary,
    pearson,
    split_correlation,
    student_t_cdf,
    student_t_two_sided,
    t_test_welch,
)

from oracles import pearson_oracle, welch_oracle


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]).r == 1.0
    assert pearson([1, 2, 3], [2, 4, 6]).p_two_sided == 0.0
    assert pearson([1, 2, 3], [6, 4, 2]).r == -1.0
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]).r == 0.8


def test_pearson_errors():
    with pytest.raises(TooFewPoints):
        pearson([1, 2], [1, 2])
    with pytest.raises(ConstantInput):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        pearson([1, 2, 3], [1, 2])


def test_welch_examples():
    a = [1.0, 2.0, 3.0, 4.0]
    res = t_test_welch(a, a)
    assert (res.t, res.p_two_sided) == (0.0, 1.0)
    r1, r2 = t_test_welch([1, 2, 3, 4], [3, 4, 5, 6]), t_test_welch([3, 4, 5, 6], [1, 2, 3, 4])
    assert r1.t == -r2.t and r1.p_two_sided == r2.p_two_sided
    t, p, df = welch_oracle([1, 2, 3, 4], [3, 4, 5, 6])
    assert r1.t == pytest.approx(t, abs=1e-9)
    assert r1.p_two_sided == pytest.approx(p, abs=1e-9)
    assert r1.df == pytest.approx(df, abs=1e-9)


def test_welch_errors():
    with pytest.raises(TooFewPoints):
        t_test_welch([1], [1, 2])
    with pytest.raises(BothConstantEqual):
        t_test_welch([2, 2], [2, 2, 2])
    with pytest.raises(ZeroVariance):
        t_test_welch([2, 2], [3, 3])


def test_welch_one_constant_group_is_fine():
    res = t_test_welch([2, 2, 2], [1, 2, 3])
    assert res.t == 0 and res.p_two_sided == 1.0


def test_group_summary():
    m, s = group_summary([2, 4])
    assert m == 3.0 and s == pytest.approx(math.sqrt(2))
    assert group_summary([5, 5, 5]) == (5.0, 0.0)
    with pytest.raises(TooFewPoints):
        group_summary([1])


@pytest.mark.parametrize("seed", range(20))
def test_match_high_precision_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 13))
    x, y = rng.normal(size=n), rng.normal(size=n) + 0.5 * rng.normal() * np.arange(n)
    r, p = pearson_oracle(x, y)
    got = pearson(list(x), list(y))
    assert got.r == pytest.approx(r, abs=1e-9) and got.p_two_sided == pytest.approx(p, abs=1e-9)
    a = rng.normal(0, 1, int(rng.integers(2, 13)))
    b = rng.normal(0.5, 2, int(rng.integers(2, 13)))
    t, p, df = welch_oracle(a, b)
    got = t_test_welch(list(a), list(b))
    assert got.t == pytest.approx(t, abs=1e-9)
    assert got.p_two_sided == pytest.approx(p, abs=1e-9)
    assert got.df == pytest.approx(df, rel=1e-9)


@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (2, 3, 0.9), (10, 0.5, 0.99), (0.5, 20, 0.01), (7.5, 7.5, 0.5)])
def test_betainc_against_mpmath(a, b, x):
    assert betainc(a, b, x) == pytest.approx(float(mpmath.betainc(a, b, 0, x, regularized=True)), abs=1e-13)


def test_betainc_edges():
    assert betainc(2, 3, 0.0) == 0.0 and betainc(2, 3, 1.0) == 1.0
    with pytest.raises(ValueError):
        betainc(0, 1, 0.5)


@given(st.floats(-50, 50), st.floats(0.5, 200))
def test_t_cdf_symmetry(t, df):
    assert student_t_cdf(t, df) + student_t_cdf(-t, df) == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= student_t_two_sided(t, df) <= 1.0


@given(st.floats(0.5, 200))
def test_t_cdf_at_zero_and_monotone(df):
    assert student_t_cdf(0.0, df) == 0.5
    ts = np.linspace(-20, 20, 81)
    cdf = [student_t_cdf(float(t), df) for t in ts]
    assert all(a <= b for a, b in zip(cdf, cdf[1:]))


@given(
    st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=12),
    st.floats(0.1, 10),
    st.floats(-50, 50),
)
def test_pearson_affine_invariance(pairs, scale, shift):
    x = [a for a, _ in pairs]
    y = [b for _, b in pairs]
    try:
        base = pearson(x, y)
    except ConstantInput:
        return
    if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
        return
    moved = pearson([scale * v + shift for v in x], y)
    assert moved.r == pytest.approx(base.r, abs=1e-9)
    assert pearson([-scale * v for v in x], y).r == pytest.approx(-base.r, abs=1e-9)


def _profiles(scores, ratios):
    return [SimpleNamespace(severity_score=s, dyadic_ratio=r) for s, r in zip(scores, ratios)]


def test_split_correlation_signs_and_exact_line():
    rng = np.random.default_rng(0)
    scores = list(range(28))
    ratios = [0.02 * s if s < 10 else 0.4 - 0.02 * s + 0.01 * rng.normal() for s in scores]
    below, above = split_correlation(_profiles(scores, ratios))
    assert below.r == pytest.approx(1.0, abs=1e-12) and above.r < 0


def test_split_correlation_missing_side():
    below, above = split_correlation(_profiles([1, 3, 5, 7], [0.1, 0.3, 0.2, 0.4]))
    assert below.n == 4 and above is None
