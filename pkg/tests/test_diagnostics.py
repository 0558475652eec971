import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mlgweibull.diagnostics import (SUMMARY_COLUMNS, cpo_estimate, equal_tailed_interval,
                                    hpd_interval, lpml_grid, pointwise_log_density,
                                    posterior_summary)
from mlgweibull.errors import ConfigError, NumericalError
from mlgweibull.model import Dataset, Hyperparams, PosteriorDraws, weibull_log_pdf
from mlgweibull.spatial import LocationSet

from oracles import naive_cpo


def toy(n=5, p=2, B=100, seed=0, k=0.8):
    rng = np.random.default_rng(seed)
    data = Dataset(LocationSet(rng.uniform(0, 3, (n, 2))), rng.uniform(0, 1, (n, p)),
                   rng.weibull(k, n) + 0.1)
    draws = np.column_stack([rng.normal(-0.5, 0.3, (B, p)), rng.normal(0, 0.5, (B, n)),
                             rng.normal(size=(B, 2)), np.full(B, 5.0)])
    return data, PosteriorDraws(draws, p, n)


# -- CPO / LPML ------------------------------------------------------------------

def test_cpo_single_draw_is_density():
    data, d = toy(B=1)
    c = cpo_estimate(d, data, 0.8)
    b = np.exp(data.X @ d.beta[0] + d.W[0])
    expect = [weibull_log_pdf(z, 0.8, bi) for z, bi in zip(data.Z, b)]
    np.testing.assert_allclose(c.log_cpo, expect, rtol=1e-12)


def test_cpo_matches_direct_arithmetic():
    data, d = toy(n=5, B=100)
    c = cpo_estimate(d, data, 0.8)
    ref = naive_cpo(pointwise_log_density(d, data, 0.8))
    np.testing.assert_allclose(c.cpo, ref, rtol=1e-12)


def test_cpo_uses_posterior_mean_w_by_default():
    data, d = toy()
    ll = pointwise_log_density(d, data, 0.8)
    wbar = d.W.mean(axis=0)
    b = np.exp(d.beta[3] @ data.X.T + wbar)
    np.testing.assert_allclose(ll[3], weibull_log_pdf(data.Z, 0.8, b), rtol=1e-12)
    per = pointwise_log_density(d, data, 0.8, per_draw_w=True)
    b = np.exp(d.beta[3] @ data.X.T + d.W[3])
    np.testing.assert_allclose(per[3], weibull_log_pdf(data.Z, 0.8, b), rtol=1e-12)


def test_lpml_zero_when_all_densities_one():
    # at z = 1, eta = 0 the log density is log k - 1, which is 0 for k = e
    n, B = 3, 4
    data = Dataset(LocationSet(np.arange(2 * n).reshape(n, 2)), np.zeros((n, 1)), np.ones(n))
    d = PosteriorDraws(np.zeros((B, 1 + n + 3)), 1, n)
    c = cpo_estimate(d, data, math.e)
    assert c.lpml == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(c.cpo, 1.0)


def test_lpml_is_sum_of_log_cpo_and_stability_report():
    data, d = toy(n=7)
    c = cpo_estimate(d, data, 0.8)
    assert c.lpml == pytest.approx(np.sum(np.log(c.cpo)), rel=1e-14)
    assert c.lpml == np.sum(c.log_cpo)
    assert np.all(c.cpo > 0) and c.max_log_ratio >= 0


def test_cpo_permutation_equivariance():
    data, d = toy(n=6, seed=3)
    perm = np.array([3, 0, 5, 1, 4, 2])
    data2 = Dataset(LocationSet(data.locs.coords[perm]), data.X[perm], data.Z[perm])
    cols = np.concatenate([np.arange(d.p), d.p + perm, d.p + d.n + np.arange(3)])
    d2 = PosteriorDraws(d.draws[:, cols], d.p, d.n)
    a, b = cpo_estimate(d, data, 0.8), cpo_estimate(d2, data2, 0.8)
    np.testing.assert_allclose(b.cpo, a.cpo[perm], rtol=1e-12)
    assert b.lpml == pytest.approx(a.lpml, rel=1e-12)


def test_cpo_nonfinite_density_names_observation():
    data, d = toy(n=4)
    bad = d.draws.copy()
    bad[2, d.p + 1] = np.inf
    with pytest.raises(NumericalError, match="observation 1"):
        cpo_estimate(PosteriorDraws(bad, d.p, d.n), data, 0.8, per_draw_w=True)


def test_cpo_dimension_mismatch():
    data, d = toy(n=4)
    other, _ = toy(n=5)
    with pytest.raises(ConfigError):
        cpo_estimate(d, other, 0.8)


def _tiny_data(seed=0, n=10):
    rng = np.random.default_rng(seed)
    return Dataset(LocationSet(rng.uniform(0, 3, (n, 2))), rng.uniform(0, 1, (n, 2)),
                   rng.weibull(0.5, n))


def test_lpml_grid_singleton_flagged():
    rows = lpml_grid(_tiny_data(), Hyperparams(k=1.0, alpha_beta=1.0, kappa_beta=1.0), [0.5], 30, 10, 0)
    assert len(rows) == 1 and rows[0].best and math.isfinite(rows[0].lpml)


def test_lpml_grid_duplicates_identical():
    rows = lpml_grid(_tiny_data(1), Hyperparams(k=1.0, alpha_beta=1.0, kappa_beta=1.0),
                     [0.4, 0.7, 0.4], 40, 10, 3)
    assert rows[0].lpml == rows[2].lpml
    assert sum(r.best for r in rows) == 1
    best = max(rows, key=lambda r: r.lpml)
    assert best.best


def test_lpml_grid_parallel_matches_serial():
    data = _tiny_data(2)
    hyper = Hyperparams(k=1.0, alpha_beta=1.0, kappa_beta=1.0)
    a = lpml_grid(data, hyper, [0.3, 0.6], 30, 10, 5)
    b = lpml_grid(data, hyper, [0.3, 0.6], 30, 10, 5, n_jobs=2)
    assert [r.lpml for r in a] == [r.lpml for r in b]


def test_lpml_grid_reports_failures_and_continues(monkeypatch):
    from mlgweibull import diagnostics

    real = diagnostics.run_chain

    def flaky(data, hyper, *a, **kw):
        if hyper.k == 0.3:
            raise NumericalError("boom")
        return real(data, hyper, *a, **kw)

    monkeypatch.setattr(diagnostics, "run_chain", flaky)
    rows = lpml_grid(_tiny_data(3), Hyperparams(k=1.0), [0.3, 0.6], 20, 5, 0)
    assert math.isnan(rows[0].lpml) and "boom" in rows[0].error and not rows[0].best
    assert rows[1].best


def test_lpml_grid_empty():
    with pytest.raises(ConfigError):
        lpml_grid(_tiny_data(), Hyperparams(k=1.0), [], 10, 2, 0)


# -- intervals ---------------------------------------------------------------------

def test_hpd_uniform_spacing_tie_rule():
    assert hpd_interval(np.arange(1, 101), 0.95) == (1.0, 95.0)


def test_hpd_normal():
    lo, hi = hpd_interval(np.random.default_rng(0).standard_normal(10**6), 0.95)
    assert abs(lo + 1.96) < 0.02 and abs(hi - 1.96) < 0.02


def test_hpd_constant_samples():
    assert hpd_interval(np.full(50, 7.0)) == (7.0, 7.0)


def test_hpd_skewed_is_shifted_left():
    x = np.random.default_rng(1).exponential(size=10**5)
    lo, hi = hpd_interval(x, 0.9)
    assert lo < 0.01 and hi == pytest.approx(-math.log(0.1), rel=0.03)


def test_hpd_level_validation():
    with pytest.raises(ConfigError):
        hpd_interval([1.0, 2.0], 1.0)
    with pytest.raises(ConfigError):
        hpd_interval([], 0.5)


samples = arrays(np.float64, st.integers(2, 300), elements=st.floats(-1e6, 1e6))


@settings(max_examples=200)
@given(x=samples, level=st.floats(0.05, 0.99))
def test_hpd_no_wider_than_equal_tailed(x, level):
    lo, hi = hpd_interval(x, level)
    elo, ehi = equal_tailed_interval(x, level)
    assert lo <= hi
    assert hi - lo <= (ehi - elo) * (1 + 1e-12) + 1e-9


@given(x=samples, c=st.floats(-1e3, 1e3))
def test_intervals_shift_by_constant(x, c):
    x = np.round(x)  # exact arithmetic under the shift
    lo, hi = hpd_interval(x, 0.8)
    lo2, hi2 = hpd_interval(x + np.round(c), 0.8)
    assert (lo2, hi2) == (lo + np.round(c), hi + np.round(c))
    elo, ehi = equal_tailed_interval(x, 0.8)
    elo2, ehi2 = equal_tailed_interval(x + np.round(c), 0.8)
    assert elo2 == pytest.approx(elo + np.round(c), abs=1e-6)
    assert ehi2 == pytest.approx(ehi + np.round(c), abs=1e-6)


# -- summaries ---------------------------------------------------------------------

def _draws(cols):
    cols = np.asarray(cols, dtype=float)
    B = cols.shape[0]
    return PosteriorDraws(np.column_stack([cols, np.zeros((B, 1)), np.zeros((B, 3))]), 1, 1)


def test_summary_constant_column():
    rows = posterior_summary(_draws(np.full((20, 1), 3.0)))
    r = rows[0]
    assert r.sd == 0 and (r.hpd_lo, r.hpd_hi, r.eq_lo, r.eq_hi) == (3.0,) * 4


def test_summary_two_draws():
    r = posterior_summary(_draws([[0.0], [2.0]]))[0]
    assert r.mean == 1.0 and r.sd == pytest.approx(math.sqrt(2), rel=1e-15)


def test_summary_single_draw():
    r = posterior_summary(_draws([[1.5]]))[0]
    assert r.sd == 0 and r.hpd_lo == r.hpd_hi == 1.5


def test_summary_symmetric_hpd_close_to_equal_tailed():
    x = np.random.default_rng(5).standard_normal((20000, 1))
    r = posterior_summary(_draws(x))[0]
    assert abs(r.hpd_lo - r.eq_lo) < 0.05 and abs(r.hpd_hi - r.eq_hi) < 0.05


def test_summary_columns_and_determinism():
    data, d = toy()
    a, b = posterior_summary(d), posterior_summary(d)
    assert [r.name for r in a] == d.names
    assert a == b
    assert SUMMARY_COLUMNS[0] == "parameter"
    assert all(r.hpd_lo <= r.hpd_hi and r.eq_lo <= r.eq_hi for r in a)
