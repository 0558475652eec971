"""CPO/LPML model comparison, HPD intervals and posterior summaries."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, MLGWeibullError, NumericalError
from .model import Dataset, Hyperparams, PosteriorDraws, run_chain, weibull_log_pdf_eta

log = logging.getLogger(__name__)


@dataclass
class CpoVector:
    """Per-observation CPO estimates and their log sum.

    ``max_log_ratio`` is the largest spread ``max_b log f - min_b log f`` over
    observations; large values flag an unstable harmonic-mean estimate.
    """

    cpo: np.ndarray
    log_cpo: np.ndarray
    lpml: float
    max_log_ratio: float


def pointwise_log_density(draws: PosteriorDraws, data: Dataset, k, *, per_draw_w=False):
    """B x n matrix of ``log f(Z_i | beta_b, x_i, w_i)``.

    By default ``w_i`` is the posterior mean of ``w(s_i)``; ``per_draw_w``
    uses each draw's own ``w_b(s_i)`` instead.
    """
    if draws.p != data.p or draws.n != data.n:
        raise ConfigError("draws do not match the dataset dimensions")
    w = draws.W if per_draw_w else draws.W.mean(axis=0)[None, :]
    eta = draws.beta @ data.X.T + w
    return weibull_log_pdf_eta(data.Z[None, :], k, eta)


def cpo_estimate(draws: PosteriorDraws, data: Dataset, k, *, per_draw_w=False) -> CpoVector:
    """Harmonic-mean CPO, ``CPO_i^{-1} = mean_b 1 / f(Z_i | theta_b)``, in log space."""
    with np.errstate(invalid="ignore", over="ignore"):
        ll = pointwise_log_density(draws, data, k, per_draw_w=per_draw_w)
    bad = np.flatnonzero(~np.all(np.isfinite(ll), axis=0))
    if bad.size:
        raise NumericalError(f"non-finite density for observation {bad[0]}")
    B = ll.shape[0]
    log_cpo = -(logsumexp(-ll, axis=0) - math.log(B))
    spread = float(np.max(ll.max(axis=0) - ll.min(axis=0)))
    return CpoVector(np.exp(log_cpo), log_cpo, float(np.sum(log_cpo)), spread)


@dataclass
class LpmlRow:
    k: float
    lpml: float
    best: bool = False
    error: str = ""


def _lpml_job(args):
    data, hyper, n_iter, n_burn, seed, per_draw_w = args
    try:
        draws = run_chain(data, hyper, n_iter, n_burn, seed)
        return cpo_estimate(draws, data, hyper.k, per_draw_w=per_draw_w).lpml, ""
    except MLGWeibullError as exc:
        log.warning("LPML fit failed for k=%g: %s", hyper.k, exc)
        return math.nan, str(exc)


def lpml_grid(data: Dataset, hyper: Hyperparams, k_grid, n_iter, n_burn, seed, *,
              per_draw_w=False, n_jobs=1):
    """Fit one chain per shape value and flag the LPML maximizer.

    Every chain uses the same ``seed`` (common random numbers), so repeated
    ``k`` values give identical rows. ``hyper.k`` is ignored.
    """
    k_grid = [float(k) for k in k_grid]
    if not k_grid:
        raise ConfigError("k_grid must be nonempty")
    jobs = [(data, replace(hyper, k=k), n_iter, n_burn, seed, per_draw_w) for k in k_grid]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_lpml_job, jobs))
    else:
        results = [_lpml_job(j) for j in jobs]
    rows = [LpmlRow(k, lp, False, err) for k, (lp, err) in zip(k_grid, results)]
    finite = [i for i, r in enumerate(rows) if math.isfinite(r.lpml)]
    if finite:
        best = max(finite, key=lambda i: rows[i].lpml)
        rows[best].best = True
    return rows


def hpd_interval(samples, level=0.95):
    """Shortest window of ``ceil(level * B)`` consecutive order statistics.

    Ties go to the window with the smallest lower endpoint.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    B = x.shape[0]
    if not 0 < level < 1:
        raise ConfigError(f"level must lie in (0, 1), got {level}")
    if B == 0:
        raise ConfigError("hpd_interval needs at least one sample")
    if B == 1:
        return float(x[0]), float(x[0])
    m = min(B, max(1, math.ceil(round(level * B, 9))))
    widths = x[m - 1:] - x[:B - m + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + m - 1])


def equal_tailed_interval(samples, level=0.95, axis=None):
    """Order statistics at ``ceil(t B)`` for ``t = (1 -+ level) / 2``.

    Uses the inverted empirical CDF rather than interpolation, so the interval
    always spans at least ``ceil(level * B)`` samples and is never shorter
    than :func:`hpd_interval`.
    """
    if not 0 < level < 1:
        raise ConfigError(f"level must lie in (0, 1), got {level}")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(np.asarray(samples, dtype=float), [tail, 1.0 - tail], axis=axis,
                         method="inverted_cdf")
    if axis is None:
        return float(lo), float(hi)
    return lo, hi


@dataclass
class SummaryRow:
    name: str
    mean: float
    sd: float
    hpd_lo: float
    hpd_hi: float
    eq_lo: float
    eq_hi: float


SUMMARY_COLUMNS = ("parameter", "mean", "sd", "hpd_lo", "hpd_hi", "eq_lo", "eq_hi")


def posterior_summary(draws: PosteriorDraws, level=0.95):
    """Mean, sample SD (ddof=1; 0 for a single draw) and intervals per column."""
    rows = []
    B = len(draws)
    for j, name in enumerate(draws.names):
        col = draws.draws[:, j]
        sd = float(np.std(col, ddof=1)) if B > 1 else 0.0
        rows.append(SummaryRow(name, float(np.mean(col)), sd, *hpd_interval(col, level),
                               *equal_tailed_interval(col, level)))
    return rows
