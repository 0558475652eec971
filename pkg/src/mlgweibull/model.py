"""Spatial Weibull regression with MLG priors and its Gibbs sampler.

Model, with ``b_i = exp(x_i' beta + w_i)``::

    Z_i | beta, W        ~ Weibull(k, b_i)        density k b z^(k-1) exp(-z^k b)
    W | sigma_w, phi     ~ MLG(0, chol(sigma_w^2 H(phi)), alpha_w 1, kappa_w 1)
    beta | sigma         ~ MLG(0, sigma I, alpha_beta 1, kappa_beta 1)
    log sigma, log sigma_w ~ N(0, 1)
    phi                  ~ discrete uniform on ``phi_grid``

``beta`` and ``W`` have conditional-MLG full conditionals and are updated by
slice-sampling sweeps; ``log sigma`` and ``log sigma_w`` by random-walk
Metropolis; ``phi`` by exact discrete Gibbs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from . import _backend
from .errors import ConfigError, FactorizationError, NumericalError
from .mlg import CMLGParams, SLICE_MAX_STEPS, SLICE_WIDTH, dense_to_csc
from .spatial import LocationSet, distance_matrix, exp_covariogram, matrix_sqrt

log = logging.getLogger(__name__)

RATE_CLIP = 1e300
ADAPT_WINDOW = 50
ADAPT_TARGET = (0.30, 0.45)
W_BASES = ("whitened", "natural")


# -- Weibull ----------------------------------------------------------------

def _check_positive(x, name):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ConfigError(f"{name} must be finite and positive")
    return x


def weibull_log_pdf(z, k, b):
    """``log k + log b + (k-1) log z - z^k b``; broadcasts over arrays."""
    z = _check_positive(z, "z")
    k = _check_positive(k, "k")
    b = _check_positive(b, "b")
    out = np.log(k) + np.log(b) + (k - 1.0) * np.log(z) - z ** k * b
    return out if out.ndim else float(out)


def weibull_log_pdf_eta(z, k, eta):
    """Weibull log density with ``b = exp(eta)``, evaluated without forming ``b``."""
    logz = np.log(z)
    return np.log(k) + eta + (k - 1.0) * logz - np.exp(k * logz + eta)


def weibull_from_uniform(u, k, b):
    """Inverse-CDF map ``(-log u / b)^(1/k)`` for ``u`` in (0, 1]."""
    u = np.asarray(u, dtype=float)
    out = (-np.log(u) / b) ** (1.0 / k)
    return out if out.ndim else float(out)


def weibull_sample(k, b, rng, size=None):
    """Exact Weibull(k, b) draws (rate-like ``b``)."""
    _check_positive(k, "k")
    _check_positive(b, "b")
    if size is None:
        size = np.broadcast(np.asarray(k), np.asarray(b)).shape or None
    u = 1.0 - rng.random(size)
    return weibull_from_uniform(u, k, b)


def weibull_sample_eta(k, eta, rng, size=None):
    """Weibull draws with ``b = exp(eta)``, computed in log space."""
    eta = np.asarray(eta, dtype=float)
    if size is None:
        size = eta.shape
    u = 1.0 - rng.random(size)
    return np.exp((np.log(-np.log(u)) - eta) / k)


# -- data and parameter containers -------------------------------------------

@dataclass(frozen=True, eq=False)
class Dataset:
    """Locations, n x p covariates (intercept optional) and positive losses."""

    locs: LocationSet
    X: np.ndarray
    Z: np.ndarray
    covariate_names: tuple = ()
    site_ids: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        Z = np.asarray(self.Z, dtype=float).ravel()
        n = len(self.locs)
        if X.shape[0] != n or Z.shape[0] != n:
            raise ConfigError(f"row counts disagree: locations {n}, X {X.shape[0]}, Z {Z.shape[0]}")
        if not np.all(np.isfinite(X)):
            raise ConfigError("covariates must be finite")
        if not np.all(np.isfinite(Z)) or np.any(Z <= 0):
            raise ConfigError("losses must be finite and positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)
        names = tuple(self.covariate_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ConfigError("covariate_names length does not match X")
        object.__setattr__(self, "covariate_names", names)
        ids = tuple(str(s) for s in self.site_ids) or tuple(str(i + 1) for i in range(n))
        if len(ids) != n:
            raise ConfigError("site_ids length does not match the data")
        object.__setattr__(self, "site_ids", ids)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @cached_property
    def dist(self):
        return distance_matrix(self.locs)

    @cached_property
    def log_z(self):
        return np.log(self.Z)

    @cached_property
    def _caches(self):
        return {}


def default_phi_grid():
    return tuple(float(v) for v in range(1, 11))


@dataclass(frozen=True)
class Hyperparams:
    """Fixed quantities of one fit.

    ``kappa_beta`` and ``kappa_w`` are log-gamma *scales*. The defaults for
    the beta prior (``alpha_beta=1e4``, ``kappa_beta=1e-4``) make each latent
    coordinate approximately N(0, 1e-4).
    """

    k: float
    alpha_beta: float = 10_000.0
    kappa_beta: float = 1e-4
    alpha_w: float = 1.0
    kappa_w: float = 1.0
    phi_grid: tuple = field(default_factory=default_phi_grid)
    mh_step_sigma: float = 0.3
    mh_step_sigma_w: float = 0.3
    adapt: bool = True
    w_basis: str = "whitened"

    def __post_init__(self):
        for name in ("k", "alpha_beta", "kappa_beta", "alpha_w", "kappa_w",
                     "mh_step_sigma", "mh_step_sigma_w"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        grid = tuple(float(g) for g in np.atleast_1d(self.phi_grid))
        if not grid:
            raise ConfigError("phi_grid must be nonempty")
        if any(g <= 0 or not math.isfinite(g) for g in grid):
            raise ConfigError("phi_grid values must be positive")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigError("phi_grid must be increasing")
        object.__setattr__(self, "phi_grid", grid)
        if self.w_basis not in W_BASES:
            raise ConfigError(f"w_basis must be one of {W_BASES}")


@dataclass(frozen=True, eq=False)
class ChainState:
    beta: np.ndarray
    W: np.ndarray
    log_sigma: float
    log_sigma_w: float
    phi: float

    def is_finite(self):
        return bool(np.all(np.isfinite(self.beta)) and np.all(np.isfinite(self.W))
                    and math.isfinite(self.log_sigma) and math.isfinite(self.log_sigma_w)
                    and math.isfinite(self.phi))

    def as_vector(self):
        return np.concatenate([self.beta, self.W, [self.log_sigma, self.log_sigma_w, self.phi]])


def initial_state(data: Dataset, hyper: Hyperparams) -> ChainState:
    """beta = 0, W = 0, log sigma = log sigma_w = 0, phi = lower median of the grid."""
    grid = hyper.phi_grid
    return ChainState(np.zeros(data.p), np.zeros(data.n), 0.0, 0.0, grid[(len(grid) - 1) // 2])


@dataclass
class PosteriorDraws:
    """Stored post-burn-in states.

    ``draws`` columns: ``beta_1..beta_p, w_1..w_n, log_sigma, log_sigma_w, phi``.
    """

    draws: np.ndarray
    p: int
    n: int
    names: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.atleast_2d(np.asarray(self.draws, dtype=float))
        if self.draws.shape[1] != self.p + self.n + 3:
            raise ConfigError(f"draws have {self.draws.shape[1]} columns, expected {self.p + self.n + 3}")
        if self.draws.shape[0] < 1:
            raise ConfigError("at least one draw is required")
        if not self.names:
            self.names = column_names([f"x{j + 1}" for j in range(self.p)],
                                      [str(i + 1) for i in range(self.n)])

    def __len__(self):
        return self.draws.shape[0]

    @property
    def beta(self):
        return self.draws[:, :self.p]

    @property
    def W(self):
        return self.draws[:, self.p:self.p + self.n]

    @property
    def log_sigma(self):
        return self.draws[:, self.p + self.n]

    @property
    def log_sigma_w(self):
        return self.draws[:, self.p + self.n + 1]

    @property
    def phi(self):
        return self.draws[:, self.p + self.n + 2]

    def column(self, name):
        return self.draws[:, self.names.index(name)]


def column_names(covariate_names, site_ids):
    return ([f"beta[{c}]" for c in covariate_names] + [f"w[{s}]" for s in site_ids]
            + ["log_sigma", "log_sigma_w", "phi"])


# -- cached spatial factors ---------------------------------------------------

class _GridFactor:
    """Cholesky factor of ``H(phi)`` (unit sill) and its compressed columns."""

    def __init__(self, dist, phi):
        self.phi = phi
        try:
            self.L = matrix_sqrt(exp_covariogram(dist, phi, 1.0))
        except FactorizationError as exc:
            log.warning("covariance factorization failed at phi=%g: %s", phi, exc)
            self.L = None
            return
        self.logdet = float(np.sum(np.log(np.diag(self.L))))
        n = self.L.shape[0]
        # columns of [sigma_w L; I]: lower-triangular entries of L, then the unit row
        Lcsc = dense_to_csc(np.tril(self.L))
        counts = np.diff(Lcsc[0]) + 1
        self.indptr = np.zeros(n + 1, dtype=np.intp)
        np.cumsum(counts, out=self.indptr[1:])
        nnz = self.indptr[-1]
        unit_pos = self.indptr[1:] - 1
        l_pos = np.setdiff1d(np.arange(nnz), unit_pos)
        self.indices = np.empty(nnz, dtype=np.intp)
        self.indices[l_pos] = Lcsc[1]
        self.indices[unit_pos] = n + np.arange(n)
        self.l_pos = l_pos
        self.unit_pos = unit_pos
        self.l_data = Lcsc[2]
        self.colsum = self.L.sum(axis=0)

    @property
    def ok(self):
        return self.L is not None

    def whiten(self, W):
        return linalg.solve_triangular(self.L, W, lower=True, check_finite=False)

    @cached_property
    def L_inv(self):
        return linalg.solve_triangular(self.L, np.eye(self.L.shape[0]), lower=True)


class _Factors:
    def __init__(self, data: Dataset, hyper: Hyperparams):
        self.grid = np.asarray(hyper.phi_grid)
        self.by_phi = {}
        for phi in hyper.phi_grid:
            if phi not in self.by_phi:
                self.by_phi[phi] = _GridFactor(data.dist, phi)
        if not any(f.ok for f in self.by_phi.values()):
            raise NumericalError("covariance factorization failed at every phi grid value")
        # beta block columns: X column entries, then the prior row n + j
        Xcsc = dense_to_csc(data.X)
        n, p = data.X.shape
        ends = Xcsc[0][1:]
        self.beta_indptr = (Xcsc[0] + np.arange(p + 1)).astype(np.intp)
        self.beta_indices = np.insert(Xcsc[1], ends, n + np.arange(p)).astype(np.intp)
        self.beta_xdata = Xcsc[2]
        self.beta_ends = ends
        self.x_colsum = data.X.sum(axis=0)

    def get(self, phi):
        try:
            f = self.by_phi[phi]
        except KeyError:
            raise ConfigError(f"phi={phi} is not on the grid") from None
        if not f.ok:
            raise NumericalError(f"covariance at phi={phi} is not positive definite")
        return f


def _factors(data: Dataset, hyper: Hyperparams) -> _Factors:
    key = ("factors", hyper.phi_grid)
    cache = data._caches
    if key not in cache:
        cache[key] = _Factors(data, hyper)
    return cache[key]


def _clip_rates(log_rate, what):
    rate = np.exp(np.minimum(log_rate, math.log(RATE_CLIP)))
    if np.any(log_rate > math.log(RATE_CLIP)):
        log.warning("%s: %d rates exceed %.0e and were clipped", what,
                    int(np.sum(log_rate > math.log(RATE_CLIP))), RATE_CLIP)
    return rate


# -- full conditionals ----------------------------------------------------------

def beta_conditional_params(X, logZk, W, log_sigma, alpha_beta, kappa_beta) -> CMLGParams:
    """cMLG parameters of beta given everything else (works for n = 0)."""
    X = np.asarray(X, dtype=float).reshape(len(logZk), -1) if np.ndim(X) == 1 else np.asarray(X, dtype=float)
    n, p = X.shape
    inv_sigma = math.exp(-log_sigma)
    H = np.vstack([X, inv_sigma * np.eye(p)])
    alpha = np.concatenate([np.ones(n), np.full(p, float(alpha_beta))])
    log_rate = np.concatenate([np.asarray(logZk, dtype=float) + W, np.full(p, -math.log(kappa_beta))])
    return CMLGParams(H, alpha, _clip_rates(log_rate, "beta full conditional"), check_rank=False)


def beta_full_conditional(state: ChainState, data: Dataset, hyper: Hyperparams) -> CMLGParams:
    """``H = [X; I/sigma]``, shapes ``[1_n; alpha_beta 1_p]``, rates ``[Z^k e^W; 1/kappa_beta]``."""
    return beta_conditional_params(data.X, hyper.k * data.log_z, state.W, state.log_sigma,
                                   hyper.alpha_beta, hyper.kappa_beta)


def w_full_conditional(state: ChainState, data: Dataset, hyper: Hyperparams) -> CMLGParams:
    """``H = [I_n; Sigma_W^{-1/2}]`` with ``Sigma_W^{-1/2} = (sigma_w L_phi)^{-1}``."""
    f = _factors(data, hyper).get(state.phi)
    n = data.n
    H = np.vstack([np.eye(n), f.L_inv * math.exp(-state.log_sigma_w)])
    alpha = np.concatenate([np.ones(n), np.full(n, float(hyper.alpha_w))])
    log_rate = np.concatenate([hyper.k * data.log_z + data.X @ state.beta,
                               np.full(n, -math.log(hyper.kappa_w))])
    return CMLGParams(H, alpha, _clip_rates(log_rate, "W full conditional"), check_rank=False)


def w_whitened_conditional(state: ChainState, data: Dataset, hyper: Hyperparams):
    """The W conditional in whitened coordinates ``u`` with ``W = T u``.

    Returns ``(params, T)`` where ``T = sigma_w L_phi`` and
    ``params.H = [T; I]``; a cMLG draw ``u`` maps to a W draw ``T u``.
    """
    f = _factors(data, hyper).get(state.phi)
    n = data.n
    T = math.exp(state.log_sigma_w) * f.L
    H = np.vstack([T, np.eye(n)])
    alpha = np.concatenate([np.ones(n), np.full(n, float(hyper.alpha_w))])
    log_rate = np.concatenate([hyper.k * data.log_z + data.X @ state.beta,
                               np.full(n, -math.log(hyper.kappa_w))])
    return CMLGParams(H, alpha, _clip_rates(log_rate, "W full conditional"), check_rank=False), T


# -- log densities used by the updates and by tests ------------------------------

def log_likelihood(state: ChainState, data: Dataset, k) -> float:
    eta = data.X @ state.beta + state.W
    return float(np.sum(weibull_log_pdf_eta(data.Z, k, eta)))


def beta_prior_log_density(beta, log_sigma, alpha_beta, kappa_beta) -> float:
    """MLG(0, sigma I, alpha_beta, kappa_beta) log density at ``beta``."""
    beta = np.asarray(beta, dtype=float)
    p = beta.shape[0]
    g = beta * math.exp(-log_sigma)
    # a tiny proposed sigma overflows exp(g): log density -inf, so the proposal is rejected
    with np.errstate(over="ignore"):
        tail = np.exp(g).sum() / kappa_beta
    return float(-p * log_sigma - p * (gammaln(alpha_beta) + alpha_beta * math.log(kappa_beta))
                 + alpha_beta * g.sum() - tail)


def w_prior_log_density(W, log_sigma_w, phi, data: Dataset, hyper: Hyperparams) -> float:
    """MLG(0, sigma_w L_phi, alpha_w, kappa_w) log density at ``W``."""
    f = _factors(data, hyper).get(phi)
    return _w_prior_from_whitened(f.whiten(W), f.logdet, log_sigma_w, hyper.alpha_w, hyper.kappa_w)


def _w_prior_from_whitened(z, logdet_L, log_sigma_w, alpha_w, kappa_w):
    n = z.shape[0]
    g = z * math.exp(-log_sigma_w)
    return float(-logdet_L - n * log_sigma_w - n * (gammaln(alpha_w) + alpha_w * math.log(kappa_w))
                 + alpha_w * g.sum() - np.exp(g).sum() / kappa_w)


def log_joint(state: ChainState, data: Dataset, hyper: Hyperparams) -> float:
    """Unnormalized log posterior of the full model."""
    if state.phi not in hyper.phi_grid:
        return -math.inf
    return (log_likelihood(state, data, hyper.k)
            + beta_prior_log_density(state.beta, state.log_sigma, hyper.alpha_beta, hyper.kappa_beta)
            + w_prior_log_density(state.W, state.log_sigma_w, state.phi, data, hyper)
            - 0.5 * state.log_sigma ** 2 - 0.5 * state.log_sigma_w ** 2
            - math.log(2 * math.pi) - math.log(len(hyper.phi_grid)))


# -- updates -------------------------------------------------------------------

def _run_sweep(indptr, indices, values, lin, log_rate, q, eta, rng, backend, what):
    sweep = _backend.get_slice_sweep(backend)
    status, bad = sweep(indptr, indices, values, lin, log_rate, q, eta,
                        SLICE_WIDTH, SLICE_MAX_STEPS, rng)
    if status:
        raise NumericalError(f"{what}: slice sampler failed at coordinate {bad} (status {status})")


def update_beta(state: ChainState, data: Dataset, hyper: Hyperparams, rng, *, backend=None) -> ChainState:
    """One slice sweep over beta under its cMLG full conditional."""
    fac = _factors(data, hyper)
    n, p = data.n, data.p
    inv_sigma = math.exp(-state.log_sigma)
    values = np.insert(fac.beta_xdata, fac.beta_ends, inv_sigma)
    lin = fac.x_colsum + hyper.alpha_beta * inv_sigma
    log_rate = np.empty(n + p)
    log_rate[:n] = hyper.k * data.log_z + state.W
    log_rate[n:] = -math.log(hyper.kappa_beta)
    beta = np.array(state.beta, dtype=float)
    eta = np.concatenate([data.X @ beta, beta * inv_sigma])
    _run_sweep(fac.beta_indptr, fac.beta_indices, values, lin, log_rate, beta, eta, rng,
               backend, "beta update")
    return replace(state, beta=beta)


def update_w(state: ChainState, data: Dataset, hyper: Hyperparams, rng, *, backend=None) -> ChainState:
    """One slice sweep over W under its cMLG full conditional.

    With ``w_basis='whitened'`` the sweep runs over ``u = (sigma_w L)^{-1} W``
    and maps back; with ``'natural'`` it runs over the coordinates of W.
    """
    f = _factors(data, hyper).get(state.phi)
    n = data.n
    sw = math.exp(state.log_sigma_w)
    log_rate = np.empty(2 * n)
    log_rate[:n] = hyper.k * data.log_z + data.X @ state.beta
    log_rate[n:] = -math.log(hyper.kappa_w)
    if hyper.w_basis == "whitened":
        values = np.empty(f.indices.shape[0])
        values[f.l_pos] = sw * f.l_data
        values[f.unit_pos] = 1.0
        lin = sw * f.colsum + hyper.alpha_w
        u = f.whiten(state.W) / sw
        eta = np.concatenate([state.W, u])
        _run_sweep(f.indptr, f.indices, values, lin, log_rate, u, eta, rng, backend, "W update")
        W = sw * (f.L @ u)
    else:
        params = w_full_conditional(state, data, hyper)
        indptr, indices, values = params.csc
        W = np.array(state.W, dtype=float)
        eta = params.H @ W
        lin = params.H.T @ params.alpha
        _run_sweep(indptr, indices, values, lin, log_rate, W, eta, rng, backend, "W update")
    return replace(state, W=W)


def _log_sigma_target(ls, beta, hyper):
    return beta_prior_log_density(beta, ls, hyper.alpha_beta, hyper.kappa_beta) - 0.5 * ls * ls


def update_hyper_mh(state: ChainState, data: Dataset, hyper: Hyperparams, which, rng, *, step=None):
    """Gaussian random-walk Metropolis step on ``log_sigma`` or ``log_sigma_w``.

    The target is the MLG prior of beta (resp. W) at the proposed scale times
    the N(0, 1) prior. Returns ``(new_state, accepted)``.
    """
    if which == "log_sigma":
        step = hyper.mh_step_sigma if step is None else step
        cur = state.log_sigma
        target = lambda ls: _log_sigma_target(ls, state.beta, hyper)  # noqa: E731
    elif which == "log_sigma_w":
        step = hyper.mh_step_sigma_w if step is None else step
        cur = state.log_sigma_w
        f = _factors(data, hyper).get(state.phi)
        z = f.whiten(state.W)
        target = lambda ls: (_w_prior_from_whitened(z, f.logdet, ls, hyper.alpha_w, hyper.kappa_w)  # noqa: E731
                             - 0.5 * ls * ls)
    else:
        raise ConfigError(f"unknown MH target {which!r}")
    prop = cur + step * rng.standard_normal()
    log_ratio = target(prop) - target(cur)
    accepted = bool(rng.random() < math.exp(log_ratio)) if log_ratio < 0 else True
    if not accepted:
        return state, False
    return replace(state, **{which: float(prop)}), True


def phi_log_posterior(state: ChainState, data: Dataset, hyper: Hyperparams) -> np.ndarray:
    """Unnormalized log posterior of phi at each grid value (``-inf`` where H(phi) is not PD)."""
    fac = _factors(data, hyper)
    out = np.empty(len(hyper.phi_grid))
    for i, phi in enumerate(hyper.phi_grid):
        f = fac.by_phi[phi]
        if not f.ok:
            out[i] = -math.inf
            continue
        out[i] = _w_prior_from_whitened(f.whiten(state.W), f.logdet, state.log_sigma_w,
                                        hyper.alpha_w, hyper.kappa_w)
    return out


def sample_grid_index(log_weights, rng) -> int:
    """Categorical draw from unnormalized log weights (one uniform)."""
    lw = np.asarray(log_weights, dtype=float)
    top = np.max(lw)
    if not math.isfinite(top):
        raise NumericalError("phi full conditional has no finite mass")
    cw = np.cumsum(np.exp(lw - top))
    idx = int(np.searchsorted(cw, rng.random() * cw[-1], side="right"))
    return min(idx, len(cw) - 1)


def update_phi(state: ChainState, data: Dataset, hyper: Hyperparams, rng) -> ChainState:
    """Exact Gibbs draw of phi from its discrete full conditional."""
    idx = sample_grid_index(phi_log_posterior(state, data, hyper), rng)
    return replace(state, phi=hyper.phi_grid[idx])


def gibbs_sweep(state, data, hyper, rng, *, steps=None, backend=None):
    """beta, W, log sigma, log sigma_w, phi in that order.

    Returns ``(state, accepted_log_sigma, accepted_log_sigma_w)``.
    """
    steps = steps or {}
    state = update_beta(state, data, hyper, rng, backend=backend)
    state = update_w(state, data, hyper, rng, backend=backend)
    state, a1 = update_hyper_mh(state, data, hyper, "log_sigma", rng, step=steps.get("log_sigma"))
    state, a2 = update_hyper_mh(state, data, hyper, "log_sigma_w", rng, step=steps.get("log_sigma_w"))
    state = update_phi(state, data, hyper, rng)
    return state, a1, a2


def run_chain(data: Dataset, hyper: Hyperparams, n_iter, n_burn, seed, *, init=None,
              backend=None) -> PosteriorDraws:
    """Run the Gibbs sampler and keep the ``n_iter - n_burn`` post-burn-in states.

    MH step sizes adapt during burn-in only (every 50 sweeps, towards an
    acceptance rate in [0.30, 0.45]) and are frozen afterwards.
    """
    n_iter, n_burn = int(n_iter), int(n_burn)
    if not n_iter > n_burn >= 0:
        raise ConfigError(f"need n_iter > n_burn >= 0, got n_iter={n_iter}, n_burn={n_burn}")
    rng = np.random.default_rng(seed)
    state = init if init is not None else initial_state(data, hyper)
    steps = {"log_sigma": hyper.mh_step_sigma, "log_sigma_w": hyper.mh_step_sigma_w}
    window = {"log_sigma": 0, "log_sigma_w": 0}
    kept_acc = {"log_sigma": 0, "log_sigma_w": 0}
    out = np.empty((n_iter - n_burn, data.p + data.n + 3))
    for it in range(n_iter):
        try:
            state, a1, a2 = gibbs_sweep(state, data, hyper, rng, steps=steps, backend=backend)
        except NumericalError as exc:
            raise NumericalError(f"sweep {it}: {exc}") from exc
        if not state.is_finite():
            raise NumericalError(f"non-finite chain state at sweep {it}")
        if it < n_burn:
            window["log_sigma"] += a1
            window["log_sigma_w"] += a2
            if hyper.adapt and (it + 1) % ADAPT_WINDOW == 0:
                for key in steps:
                    rate = window[key] / ADAPT_WINDOW
                    if rate < ADAPT_TARGET[0]:
                        steps[key] *= 0.8
                    elif rate > ADAPT_TARGET[1]:
                        steps[key] *= 1.25
                    window[key] = 0
        else:
            kept_acc["log_sigma"] += a1
            kept_acc["log_sigma_w"] += a2
            out[it - n_burn] = state.as_vector()
    B = n_iter - n_burn
    meta = {
        "n_iter": n_iter,
        "n_burn": n_burn,
        "seed": seed if isinstance(seed, (int, np.integer)) else repr(seed),
        "k": float(hyper.k),
        "accept_log_sigma": kept_acc["log_sigma"] / B,
        "accept_log_sigma_w": kept_acc["log_sigma_w"] / B,
        "step_log_sigma": steps["log_sigma"],
        "step_log_sigma_w": steps["log_sigma_w"],
    }
    return PosteriorDraws(out, data.p, data.n, column_names(data.covariate_names, data.site_ids), meta)
