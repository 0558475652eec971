"""Posterior-predictive losses and VaR / ES / TVaR estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import PosteriorDraws, weibull_sample_eta

DEFAULT_LEVELS = (0.90, 0.95, 0.99)
TVAR_GRID_POINTS = 1000

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class PredictiveQuery:
    """Covariates ``x_star`` of the new event and the observed site whose
    spatial effect it shares."""

    x_star: np.ndarray
    site: int
    n_pred_per_draw: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x_star", np.atleast_1d(np.asarray(self.x_star, dtype=float)))
        if int(self.n_pred_per_draw) < 1:
            raise ConfigError("n_pred_per_draw must be at least 1")
        if not np.all(np.isfinite(self.x_star)):
            raise ConfigError("x_star must be finite")


def posterior_predictive_sample(draws: PosteriorDraws, query: PredictiveQuery, k, rng):
    """``n_pred_per_draw`` Weibull(k, exp(x*' beta_b + w_b(site))) draws per stored state."""
    if not 0 <= query.site < draws.n:
        raise ConfigError(f"site {query.site} is out of range for {draws.n} observed sites")
    if query.x_star.shape[0] != draws.p:
        raise ConfigError(f"x_star has length {query.x_star.shape[0]}, expected {draws.p}")
    eta = draws.beta @ query.x_star + draws.W[:, query.site]
    eta = np.repeat(eta, int(query.n_pred_per_draw))
    return weibull_sample_eta(k, eta, rng)


def _sorted(samples):
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ConfigError("risk measures need at least one sample")
    return x


def _check_level(alpha):
    if not 0 < alpha < 1:
        raise ConfigError(f"level must lie in (0, 1), got {alpha}")


def _order_index(t, n):
    # 0-based index of the ceil(t * n)-th order statistic; rounding guards 0.9*100 style products
    idx = np.ceil(np.round(np.asarray(t, dtype=float) * n, 9)).astype(int) - 1
    return np.clip(idx, 0, n - 1)


def var_estimate(samples, alpha) -> float:
    """The ``ceil(alpha N)``-th smallest sample."""
    _check_level(alpha)
    x = _sorted(samples)
    return float(x[_order_index(alpha, x.size)])


def es_estimate(samples, alpha) -> float:
    """Mean of the samples at or above the VaR."""
    _check_level(alpha)
    x = _sorted(samples)
    v = x[_order_index(alpha, x.size)]
    # VaR plus mean excess: exact for tied samples
    return float(v + np.mean(x[x >= v] - v))


def tvar_estimate(samples, alpha) -> float:
    """Trapezoidal average of ``VaR_t`` over 1000 points on ``[alpha, 1 - 1/N]``."""
    _check_level(alpha)
    x = _sorted(samples)
    n = x.size
    upper = 1.0 - 1.0 / n
    if upper <= alpha:
        return float(x[_order_index(alpha, n)])
    t = np.linspace(alpha, upper, TVAR_GRID_POINTS)
    v = x[_order_index(t, n)]
    return float(v[0] + _trapezoid(v - v[0], t) / (upper - alpha))


@dataclass
class RiskReport:
    levels: np.ndarray
    var: np.ndarray
    es: np.ndarray
    tvar: np.ndarray

    def rows(self):
        return zip(self.levels, self.var, self.es, self.tvar)


def risk_report(samples, levels=DEFAULT_LEVELS) -> RiskReport:
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0 or np.any(np.diff(levels) <= 0):
        raise ConfigError("levels must be a strictly increasing nonempty sequence")
    x = _sorted(samples)
    return RiskReport(levels,
                      np.array([var_estimate(x, a) for a in levels]),
                      np.array([es_estimate(x, a) for a in levels]),
                      np.array([tvar_estimate(x, a) for a in levels]))
