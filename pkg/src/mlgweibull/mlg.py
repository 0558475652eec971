"""Multivariate log-gamma (MLG) distributions.

Conventions
-----------
``MLGParams.kappa`` is a *scale*: each latent coordinate is ``log G`` with
``G ~ Gamma(shape=alpha, scale=kappa)``. ``CMLGParams.rate`` is a *rate*: the
vector that multiplies ``exp(H q)`` in the conditional kernel
``alpha' H q - rate' exp(H q)``. Convert with ``rate = 1 / kappa``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from . import _backend
from .errors import ConfigError, FactorizationError, NumericalError

SLICE_WIDTH = 1.0
SLICE_MAX_STEPS = 50


def _positive_vector(x, name, n=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ConfigError(f"{name} must be a vector")
    if n is not None and x.shape[0] != n:
        raise ConfigError(f"{name} has length {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ConfigError(f"{name} must be finite and strictly positive")
    return x


@dataclass(frozen=True)
class LogGammaParams:
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise ConfigError(f"log-gamma shape must be positive, got {self.shape}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ConfigError(f"log-gamma scale must be positive, got {self.scale}")


def log_gamma_draws(shape, scale, rng, size=None):
    """Draw ``log G`` with ``G ~ Gamma(shape, scale)``, elementwise.

    Shapes below one use ``log G_{a+1} + log(U)/a`` so tiny shapes do not
    underflow to ``-inf``.
    """
    shape = np.asarray(shape, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if size is None:
        size = np.broadcast(shape, scale).shape
    small = shape < 1.0
    g = np.log(rng.standard_gamma(np.where(small, shape + 1.0, shape), size=size))
    if np.any(small):
        mask = np.broadcast_to(small, g.shape)
        u = rng.random(size=int(mask.sum()))
        g = np.array(g, copy=True)
        g[mask] += np.log1p(-u) / np.broadcast_to(shape, g.shape)[mask]
    out = g + np.log(scale)
    return out if out.ndim else float(out)


def log_gamma_sample(params: LogGammaParams, rng, size=None):
    """Sample ``log G`` for ``G ~ Gamma(params.shape, params.scale)``.

    The mean is ``digamma(shape) + log(scale)``.
    """
    return log_gamma_draws(params.shape, params.scale, rng, size=size)


def log_gamma_logpdf(x, shape, scale=1.0):
    """Log density of ``log G``: ``shape*x - exp(x)/scale - lgamma(shape) - shape*log(scale)``."""
    x = np.asarray(x, dtype=float)
    return shape * x - np.exp(x) / scale - gammaln(shape) - shape * np.log(scale)


@dataclass(frozen=True)
class MLGParams:
    """Parameters of ``q = mu + V gamma``, ``gamma_i ~ log-gamma(alpha_i, scale kappa_i)``."""

    mu: np.ndarray
    V: np.ndarray
    alpha: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        n = V.shape[0]
        if V.shape != (n, n):
            raise ConfigError(f"V must be square, got shape {V.shape}")
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (n,)).copy()
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", _positive_vector(np.broadcast_to(self.alpha, (n,)), "alpha"))
        object.__setattr__(self, "kappa", _positive_vector(np.broadcast_to(self.kappa, (n,)), "kappa"))
        if not np.isfinite(self.logdet):
            d = np.diag(self.V) if self._lower else np.diag(self._lu[0])
            pivot = int(np.flatnonzero(d == 0)[0])
            raise FactorizationError(f"V is singular (zero pivot at index {pivot})", pivot)

    @property
    def dim(self):
        return self.V.shape[0]

    @cached_property
    def _lower(self):
        return bool(np.all(np.triu(self.V, 1) == 0))

    @cached_property
    def _lu(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            return linalg.lu_factor(self.V, check_finite=True)

    @cached_property
    def logdet(self):
        """``log |det V|``."""
        if self._lower:
            d = np.abs(np.diag(self.V))
        else:
            d = np.abs(np.diag(self._lu[0]))
        with np.errstate(divide="ignore"):
            return float(np.sum(np.log(d)))

    def whiten(self, q):
        """``V^{-1}(q - mu)`` via the cached factorization."""
        r = np.asarray(q, dtype=float) - self.mu
        if self._lower:
            return linalg.solve_triangular(self.V, r, lower=True)
        return linalg.lu_solve(self._lu, r)


def mlg_log_density(q, params: MLGParams) -> float:
    q = np.asarray(q, dtype=float)
    if q.shape != (params.dim,):
        raise ConfigError(f"q has shape {q.shape}, expected ({params.dim},)")
    g = params.whiten(q)
    a, kap = params.alpha, params.kappa
    norm = np.sum(gammaln(a) + a * np.log(kap))
    return float(-params.logdet - norm + a @ g - np.sum(np.exp(g) / kap))


def mlg_sample(params: MLGParams, rng, size=None):
    """Exact draw(s) of ``mu + V gamma``; ``size`` adds leading sample axes."""
    if size is None:
        g = log_gamma_draws(params.alpha, params.kappa, rng)
        return params.mu + params.V @ g
    size = (size,) if np.isscalar(size) else tuple(size)
    g = log_gamma_draws(params.alpha, params.kappa, rng, size=size + (params.dim,))
    return params.mu + g @ params.V.T


@dataclass(frozen=True)
class CMLGParams:
    """Conditional MLG kernel ``exp{alpha' H q - rate' exp(H q)}``.

    ``H`` is m x p with full column rank. ``check_rank=False`` skips the SVD
    rank test for callers whose ``H`` is full rank by construction.
    """

    H: np.ndarray
    alpha: np.ndarray
    rate: np.ndarray
    check_rank: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        m, p = H.shape
        if m < p:
            raise ConfigError(f"H must have at least as many rows as columns, got {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ConfigError("H must be finite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "alpha", _positive_vector(self.alpha, "alpha", m))
        object.__setattr__(self, "rate", _positive_vector(self.rate, "rate", m))
        if self.check_rank and np.linalg.matrix_rank(H) < p:
            raise ConfigError("H is rank deficient")

    @property
    def shape(self):
        return self.H.shape

    @cached_property
    def log_rate(self):
        return np.log(self.rate)

    @cached_property
    def csc(self):
        """``(indptr, indices, data)`` of ``H`` in compressed-column form."""
        return dense_to_csc(self.H)


def dense_to_csc(H):
    H = np.asarray(H, dtype=float)
    mask = H != 0
    counts = mask.sum(axis=0)
    indptr = np.zeros(H.shape[1] + 1, dtype=np.intp)
    np.cumsum(counts, out=indptr[1:])
    # nonzero of the transpose enumerates entries column by column
    col_idx, row_idx = np.nonzero(mask.T)
    indices = np.ascontiguousarray(row_idx, dtype=np.intp)
    data = np.ascontiguousarray(H[row_idx, col_idx])
    return indptr, indices, data


def cmlg_log_kernel(q, params: CMLGParams) -> float:
    q = np.asarray(q, dtype=float)
    if q.shape != (params.shape[1],):
        raise ConfigError(f"q has shape {q.shape}, expected ({params.shape[1]},)")
    eta = params.H @ q
    return float(params.alpha @ eta - params.rate @ np.exp(eta))


def slice_sweep_csc(csc, lin, log_rate, q, rng, *, backend=None,
                    width=SLICE_WIDTH, max_steps=SLICE_MAX_STEPS):
    """Run one slice-sampling sweep on a CSC-encoded cMLG kernel.

    Returns the new coordinate vector; ``q`` is not modified.
    """
    indptr, indices, data = csc
    q = np.array(q, dtype=float, copy=True)
    eta = np.zeros(log_rate.shape[0])
    for j in range(q.shape[0]):
        a, b = indptr[j], indptr[j + 1]
        eta[indices[a:b]] += data[a:b] * q[j]
    sweep = _backend.get_slice_sweep(backend)
    status, bad = sweep(indptr, indices, data, np.ascontiguousarray(lin, dtype=float),
                        np.ascontiguousarray(log_rate, dtype=float), q, eta,
                        float(width), int(max_steps), rng)
    if status == 1:
        raise NumericalError(f"cMLG kernel is not finite at the current value of coordinate {bad}")
    if status == 2:
        raise NumericalError(f"slice shrinkage did not terminate for coordinate {bad}")
    return q


def cmlg_sample(params: CMLGParams, current, rng, *, backend=None):
    """Draw from a cMLG kernel.

    Square ``H`` is sampled exactly as ``H^{-1} w`` with
    ``w_i ~ log-gamma(alpha_i, scale 1/rate_i)``. Otherwise one coordinate
    sweep of slice sampling is run from ``current``; the sweep leaves the
    kernel invariant because every coordinate conditional is log-concave.
    """
    m, p = params.shape
    if m == p:
        w = log_gamma_draws(params.alpha, 1.0 / params.rate, rng)
        return linalg.solve(params.H, np.atleast_1d(w))
    current = np.asarray(current, dtype=float)
    if current.shape != (p,) or not np.all(np.isfinite(current)):
        raise ConfigError(f"current must be a finite vector of length {p}")
    lin = params.H.T @ params.alpha
    return slice_sweep_csc(params.csc, lin, params.log_rate, current, rng, backend=backend)


# -- expected log long-tail probabilities -----------------------------------

@dataclass(frozen=True)
class LongTailQuery:
    x: np.ndarray
    sigma_beta2: float
    sigma_w2: float
    z: float
    delta: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        if self.sigma_beta2 < 0 or self.sigma_w2 < 0:
            raise ConfigError("variances must be nonnegative")
        if not (self.z > 0 and self.delta > 0):
            raise ConfigError("z and delta must be positive")
        if not 0 < self.k < 1:
            raise ConfigError(f"long-tail regime needs 0 < k < 1, got {self.k}")

    @property
    def tail_factor(self):
        """``z^k - (z+delta)^k`` (negative)."""
        return self.z ** self.k - (self.z + self.delta) ** self.k


def expected_log_longtail_gaussian(query: LongTailQuery) -> float:
    """``E[log LP]`` with ``beta_i ~ N(0, s_beta^2)``, ``w ~ N(0, s_w^2)``."""
    mgf = np.exp(0.5 * (np.sum(query.x ** 2) * query.sigma_beta2 + query.sigma_w2))
    return float(mgf * query.tail_factor)


def expected_log_longtail_mlg(query: LongTailQuery, alpha_beta, kappa_beta, alpha_w, kappa_w) -> float:
    """``E[log LP]`` with ``beta_i = s_beta * g_i`` and ``w = s_w * g_w``.

    ``g_i ~ log-gamma(alpha_beta, scale kappa_beta)`` and
    ``g_w ~ log-gamma(alpha_w, scale kappa_w)``. Uses
    ``E[exp(t g)] = kappa^t Gamma(alpha + t) / Gamma(alpha)``, which needs
    ``alpha + t > 0`` for every coordinate.
    """
    s_beta = np.sqrt(query.sigma_beta2)
    s_w = np.sqrt(query.sigma_w2)
    t_beta = query.x * s_beta
    bad = np.flatnonzero(alpha_beta + t_beta <= 0)
    if bad.size:
        raise ConfigError(
            f"moment does not exist: alpha_beta + x[{bad[0]}]*sigma_beta = "
            f"{alpha_beta + t_beta[bad[0]]:.6g} <= 0"
        )
    if alpha_w + s_w <= 0:
        raise ConfigError(f"moment does not exist: alpha_w + sigma_w = {alpha_w + s_w:.6g} <= 0")
    log_m = np.sum(t_beta * np.log(kappa_beta) + gammaln(alpha_beta + t_beta) - gammaln(alpha_beta))
    log_m += s_w * np.log(kappa_w) + gammaln(alpha_w + s_w) - gammaln(alpha_w)
    return float(np.exp(log_m) * query.tail_factor)
