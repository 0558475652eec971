"""Bayesian spatial Weibull regression with multivariate log-gamma priors.

Gibbs sampling of regression and spatial effects through conditional
log-gamma kernels, shape selection by LPML, and posterior-predictive
VaR / ES / TVaR.
"""
from ._backend import BACKEND, available_backends
from .diagnostics import (CpoVector, cpo_estimate, equal_tailed_interval, hpd_interval,
                          lpml_grid, posterior_summary)
from .errors import ConfigError, FactorizationError, IngestError, MLGWeibullError, NumericalError
from .mlg import (CMLGParams, LogGammaParams, LongTailQuery, MLGParams, cmlg_log_kernel,
                  cmlg_sample, expected_log_longtail_gaussian, expected_log_longtail_mlg,
                  log_gamma_sample, mlg_log_density, mlg_sample)
from .model import (ChainState, Dataset, Hyperparams, PosteriorDraws, beta_full_conditional,
                    run_chain, update_hyper_mh, update_phi, w_full_conditional, weibull_log_pdf,
                    weibull_sample)
from .risk import (PredictiveQuery, RiskReport, es_estimate, posterior_predictive_sample,
                   risk_report, tvar_estimate, var_estimate)
from .simstudy import SimDesign, SimMetrics, generate_dataset, run_study
from .spatial import LocationSet, distance_matrix, exp_covariogram, matrix_sqrt

__version__ = "0.1.0"
