import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from mlgweibull.errors import ConfigError
from mlgweibull.model import PosteriorDraws
from mlgweibull.risk import (PredictiveQuery, es_estimate, posterior_predictive_sample,
                             risk_report, tvar_estimate, var_estimate)


def point_draws(beta, w, B=1):
    p, n = len(beta), len(w)
    row = np.concatenate([beta, w, [0.0, 0.0, 5.0]])
    return PosteriorDraws(np.tile(row, (B, 1)), p, n)


# -- predictive sampling ------------------------------------------------------------

def test_degenerate_posterior_gives_exponential():
    d = point_draws([0.0], [0.0, 0.0], B=1000)
    x = posterior_predictive_sample(d, PredictiveQuery([1.0], 1, 100), 1.0, np.random.default_rng(0))
    assert x.shape == (100_000,)
    assert abs(x.mean() - 1) < 3 * x.std() / math.sqrt(x.size)


def test_single_draw_single_prediction():
    d = point_draws([0.2], [0.1])
    x = posterior_predictive_sample(d, PredictiveQuery([1.0], 0, 1), 0.7, np.random.default_rng(0))
    assert x.shape == (1,)


def test_two_state_mixture_ks():
    # b* = exp(x' beta + w) in {1, 2}
    rows = np.array([[0.0, 0.0, 0, 0, 5], [math.log(2), 0.0, 0, 0, 5]] * 50_000, dtype=float)
    d = PosteriorDraws(rows, 1, 1)
    x = posterior_predictive_sample(d, PredictiveQuery([1.0], 0, 1), 1.0, np.random.default_rng(1))
    cdf = lambda z: 0.5 * (1 - np.exp(-z)) + 0.5 * (1 - np.exp(-2 * z))  # noqa: E731
    assert stats.kstest(x, cdf).statistic < 0.01


def test_predictive_uses_site_effect():
    d = point_draws([0.0], [0.0, 5.0], B=2000)
    rng = np.random.default_rng(2)
    a = posterior_predictive_sample(d, PredictiveQuery([0.0], 0, 10), 1.0, rng)
    b = posterior_predictive_sample(d, PredictiveQuery([0.0], 1, 10), 1.0, rng)
    assert b.mean() < a.mean() / 50


@pytest.mark.parametrize("site", [-1, 2])
def test_invalid_site(site):
    d = point_draws([0.0], [0.0, 0.0])
    with pytest.raises(ConfigError):
        posterior_predictive_sample(d, PredictiveQuery([1.0], site), 1.0, np.random.default_rng(0))


def test_query_validation():
    with pytest.raises(ConfigError):
        PredictiveQuery([1.0], 0, 0)
    d = point_draws([0.0, 1.0], [0.0])
    with pytest.raises(ConfigError):
        posterior_predictive_sample(d, PredictiveQuery([1.0], 0), 1.0, np.random.default_rng(0))


# -- estimators -------------------------------------------------------------------

def test_examples_on_1_to_100():
    x = np.arange(1, 101, dtype=float)
    assert var_estimate(x, 0.9) == 90
    assert es_estimate(x, 0.9) == 95
    assert tvar_estimate(x, 0.5) == pytest.approx(75.5, abs=1)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9, 0.99])
def test_constant_samples(alpha):
    x = np.full(37, 4.2)
    assert var_estimate(x, alpha) == es_estimate(x, alpha) == tvar_estimate(x, alpha) == 4.2


def test_exponential_analytic_values():
    x = np.random.default_rng(0).exponential(size=10**6)
    assert abs(var_estimate(x, 0.9) - math.log(10)) < 0.01
    assert abs(es_estimate(x, 0.9) - (1 + math.log(10))) < 0.02
    assert abs(tvar_estimate(x, 0.9) - (1 + math.log(10))) < 0.05


@pytest.mark.parametrize("f", [var_estimate, es_estimate, tvar_estimate])
def test_empty_and_level_errors(f):
    with pytest.raises(ConfigError):
        f([], 0.9)
    with pytest.raises(ConfigError):
        f([1.0, 2.0], 1.0)
    with pytest.raises(ConfigError):
        f([1.0, 2.0], 0.0)


def test_single_sample():
    assert var_estimate([3.0], 0.9) == es_estimate([3.0], 0.9) == tvar_estimate([3.0], 0.9) == 3.0


pos_samples = arrays(np.float64, st.integers(1, 400), elements=st.floats(0.0, 1e6))


@settings(max_examples=100)
@given(x=pos_samples, a=st.floats(0.01, 0.98), b=st.floats(0.01, 0.98))
def test_monotone_in_level(x, a, b):
    lo, hi = sorted((a, b))
    for f in (var_estimate, es_estimate, tvar_estimate):
        assert f(x, lo) <= f(x, hi) * (1 + 1e-12) + 1e-9


@settings(max_examples=100)
@given(x=pos_samples, a=st.floats(0.01, 0.99))
def test_dominance(x, a):
    v = var_estimate(x, a)
    assert es_estimate(x, a) >= v * (1 - 1e-12)
    assert tvar_estimate(x, a) >= v * (1 - 1e-12)


@settings(max_examples=100)
@given(x=pos_samples, a=st.floats(0.01, 0.99), e=st.integers(-6, 6))
def test_positive_homogeneity(x, a, e):
    c = 2.0 ** e  # power-of-two scaling is exact in floating point
    for f in (var_estimate, es_estimate, tvar_estimate):
        assert f(c * x, a) == pytest.approx(c * f(x, a), rel=1e-12, abs=1e-300)


@settings(max_examples=100)
@given(x=arrays(np.float64, st.integers(1, 300), elements=st.integers(0, 10**4).map(float)),
       a=st.floats(0.01, 0.99), c=st.integers(-1000, 1000))
def test_translation(x, a, c):
    for f in (var_estimate, es_estimate, tvar_estimate):
        assert f(x + c, a) == pytest.approx(f(x, a) + c, rel=1e-9, abs=1e-9)


def test_report_rows_and_levels():
    x = np.random.default_rng(0).exponential(size=1000)
    r = risk_report(x)
    rows = list(r.rows())
    assert [row[0] for row in rows] == [0.9, 0.95, 0.99]
    assert all(v <= e and v <= t for _, v, e, t in rows)
    with pytest.raises(ConfigError):
        risk_report(x, [0.9, 0.9])
    with pytest.raises(ConfigError):
        risk_report(x, [])
