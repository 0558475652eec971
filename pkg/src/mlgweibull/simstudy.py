"""Simulation designs and replicate-level performance metrics."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import equal_tailed_interval
from .errors import ConfigError, MLGWeibullError
from .mlg import log_gamma_draws
from .model import ChainState, Dataset, Hyperparams, default_phi_grid, run_chain, weibull_sample_eta
from .spatial import LocationSet, distance_matrix, duplicate_rows, exp_covariogram, matrix_sqrt

log = logging.getLogger(__name__)

W_LAWS = ("mlg", "gaussian")
METRIC_COLUMNS = ("setting", "parameter", "bias", "sd", "mse", "cr", "n_ok")


@dataclass(frozen=True)
class SimDesign:
    """One simulation scenario.

    ``alpha_beta``/``kappa_beta`` set the beta prior of the fitted model; the
    data-generating beta is the fixed ``beta_true``. The nominal truth for
    ``log_sigma`` (which has no data-generating value) is 0.
    """

    n: int = 200
    k: float = 0.5
    beta_true: tuple = (-1.0, -1.0, -1.0)
    domain: float = 3.0
    phi_true: float = 5.0
    sigma_w_true: float = 1.0
    w_law: str = "mlg"
    alpha_w: float = 1.0
    kappa_w: float = 1.0
    alpha_beta: float = 1.0
    kappa_beta: float = 1.0
    phi_grid: tuple = field(default_factory=default_phi_grid)
    n_replicates: int = 100
    n_iter: int = 5000
    n_burn: int = 2000
    level: float = 0.95
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta_true", tuple(float(b) for b in self.beta_true))
        object.__setattr__(self, "phi_grid", tuple(float(g) for g in self.phi_grid))
        if self.w_law not in W_LAWS:
            raise ConfigError(f"w_law must be one of {W_LAWS}, got {self.w_law!r}")
        for name in ("n", "n_replicates", "n_iter"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("k", "domain", "phi_true", "sigma_w_true", "alpha_w", "kappa_w",
                     "alpha_beta", "kappa_beta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.n_iter > self.n_burn >= 0:
            raise ConfigError("need n_iter > n_burn >= 0")
        if not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)")

    @property
    def label(self):
        return f"n={self.n} k={self.k:g} W~{self.w_law}"

    def hyperparams(self):
        return Hyperparams(k=self.k, alpha_beta=self.alpha_beta, kappa_beta=self.kappa_beta,
                           alpha_w=self.alpha_w, kappa_w=self.kappa_w, phi_grid=self.phi_grid)


def parameter_names(p):
    return [f"beta_{j + 1}" for j in range(p)] + ["log_sigma", "log_sigma_w"]


def generate_dataset(design: SimDesign, rng, *, w_override=None):
    """Simulate one dataset; returns ``(Dataset, truth ChainState)``.

    Locations are uniform on ``[0, domain]^2``, covariates iid U(0, 1),
    ``W = chol(sigma_w^2 H(phi)) g`` with ``g`` iid log-gamma(alpha_w, kappa_w)
    (``w_law='mlg'``) or standard normal (``'gaussian'``), and
    ``Z_i ~ Weibull(k, exp(x_i' beta + w_i))``. ``w_override`` replaces W.
    """
    n, p = int(design.n), len(design.beta_true)
    coords = rng.uniform(0.0, design.domain, size=(n, 2))
    while duplicate_rows(coords) is not None:  # pragma: no cover - probability zero
        log.warning("duplicate simulated locations; resampling")
        coords = rng.uniform(0.0, design.domain, size=(n, 2))
    locs = LocationSet(coords, "planar")
    X = rng.uniform(0.0, 1.0, size=(n, p))
    beta = np.asarray(design.beta_true)
    if w_override is not None:
        W = np.broadcast_to(np.asarray(w_override, dtype=float), (n,)).copy()
    else:
        root = matrix_sqrt(exp_covariogram(distance_matrix(locs), design.phi_true, design.sigma_w_true))
        if design.w_law == "mlg":
            g = log_gamma_draws(np.full(n, design.alpha_w), np.full(n, design.kappa_w), rng)
        else:
            g = rng.standard_normal(n)
        W = root @ np.atleast_1d(g)
    Z = weibull_sample_eta(design.k, X @ beta + W, rng)
    truth = ChainState(beta.copy(), W, 0.0, math.log(design.sigma_w_true), design.phi_true)
    return Dataset(locs, X, Z), truth


def truth_vector(truth: ChainState):
    return np.concatenate([truth.beta, [truth.log_sigma, truth.log_sigma_w]])


def fit_chain(data, hyper, n_iter, n_burn, seed):
    """Default fitter: one Gibbs chain."""
    return run_chain(data, hyper, n_iter, n_burn, seed)


def replicate_seeds(seed, r):
    """Independent (data, chain) seed sequences for replicate ``r``."""
    data_ss, chain_ss = np.random.SeedSequence([int(seed), int(r)]).spawn(2)
    return data_ss, chain_ss


def run_replicate(design: SimDesign, r, fitter=fit_chain):
    """Generate and fit replicate ``r``.

    Returns a dict with ``estimate``, ``lo``, ``hi`` and ``truth`` arrays over
    :func:`parameter_names`, or ``{"error": message}``.
    """
    data_ss, chain_ss = replicate_seeds(design.seed, r)
    try:
        data, truth = generate_dataset(design, np.random.default_rng(data_ss))
        draws = fitter(data, design.hyperparams(), design.n_iter, design.n_burn, chain_ss)
        cols = np.column_stack([draws.beta, draws.log_sigma, draws.log_sigma_w])
        lo, hi = equal_tailed_interval(cols, design.level, axis=0)
        return {"estimate": cols.mean(axis=0), "lo": lo, "hi": hi, "truth": truth_vector(truth)}
    except MLGWeibullError as exc:
        log.warning("replicate %d failed: %s", r, exc)
        return {"error": str(exc)}


@dataclass
class SimMetrics:
    """Per-parameter bias, SD (across replicates, ddof=1), MSE and coverage."""

    setting: str
    parameters: list
    bias: np.ndarray
    sd: np.ndarray
    mse: np.ndarray
    cr: np.ndarray
    n_ok: int
    n_failed: int = 0
    estimates: np.ndarray = None

    def rows(self):
        for i, name in enumerate(self.parameters):
            yield {"setting": self.setting, "parameter": name, "bias": self.bias[i],
                   "sd": self.sd[i], "mse": self.mse[i], "cr": self.cr[i], "n_ok": self.n_ok}

    def to_text(self, sep=","):
        lines = [sep.join(METRIC_COLUMNS)]
        for row in self.rows():
            lines.append(sep.join([row["setting"], row["parameter"]]
                                  + [f"{row[c]:.6f}" for c in ("bias", "sd", "mse", "cr")]
                                  + [str(row["n_ok"])]))
        return "\n".join(lines) + "\n"


def aggregate(results, setting, parameters) -> SimMetrics:
    ok = [r for r in results if "error" not in r]
    n_failed = len(results) - len(ok)
    if not ok:
        raise MLGWeibullError(f"all {len(results)} replicates failed")
    est = np.array([r["estimate"] for r in ok])
    truth = np.array([r["truth"] for r in ok])
    lo = np.array([r["lo"] for r in ok])
    hi = np.array([r["hi"] for r in ok])
    err = est - truth
    R = len(ok)
    bias = err.mean(axis=0)
    sd = est.std(axis=0, ddof=1) if R > 1 else np.zeros(est.shape[1])
    mse = np.mean(err ** 2, axis=0)
    cr = np.mean((lo <= truth) & (truth <= hi), axis=0)
    return SimMetrics(setting, list(parameters), bias, sd, mse, cr, R, n_failed, est)


def _replicate_job(args):
    design, r, fitter = args
    return run_replicate(design, r, fitter)


def run_study(design: SimDesign, *, fitter=fit_chain, n_jobs=None) -> SimMetrics:
    """Run all replicates (in parallel when ``n_jobs > 1``) and aggregate.

    Results do not depend on ``n_jobs``: every replicate seeds itself from
    ``(design.seed, replicate index)``.
    """
    n_jobs = default_jobs() if n_jobs is None else int(n_jobs)
    jobs = [(design, r, fitter) for r in range(design.n_replicates)]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_replicate_job, jobs))
    else:
        results = [_replicate_job(j) for j in jobs]
    metrics = aggregate(results, design.label, parameter_names(len(design.beta_true)))
    if metrics.n_failed:
        log.warning("%s: %d of %d replicates failed and were excluded", design.label,
                    metrics.n_failed, design.n_replicates)
    return metrics


def default_jobs():
    env = os.environ.get("MLGWEIBULL_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
