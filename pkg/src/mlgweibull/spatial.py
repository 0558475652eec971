"""Distances, the exponential covariogram and Cholesky roots."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack
from scipy.spatial.distance import cdist

from .errors import ConfigError, FactorizationError

EARTH_RADIUS_KM = 6371.0
COORD_MODES = ("planar", "lonlat")


@dataclass(frozen=True)
class LocationSet:
    """n x 2 coordinates.

    ``mode='planar'`` treats columns as x, y; ``mode='lonlat'`` treats them as
    longitude, latitude in degrees.
    """

    coords: np.ndarray
    mode: str = "planar"

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if c.ndim != 2 or c.shape[1] != 2 or c.shape[0] < 1:
            raise ConfigError(f"coords must be an n x 2 array with n >= 1, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ConfigError("coordinates must be finite")
        if self.mode not in COORD_MODES:
            raise ConfigError(f"unknown coordinate mode {self.mode!r}; use one of {COORD_MODES}")
        dup = duplicate_rows(c)
        if dup is not None:
            i, j = dup
            raise ConfigError(
                f"locations {i} and {j} are identical; jitter duplicates before fitting"
            )
        object.__setattr__(self, "coords", c)

    def __len__(self):
        return self.coords.shape[0]


def duplicate_rows(c):
    """Return the first pair ``(i, j)`` of identical rows, or None."""
    _, first, inverse = np.unique(c, axis=0, return_index=True, return_inverse=True)
    inverse = np.ravel(inverse)
    if first.size == c.shape[0]:
        return None
    for j in range(c.shape[0]):
        i = first[inverse[j]]
        if i != j:
            return int(i), int(j)
    return None  # pragma: no cover


def distance_matrix(locs: LocationSet) -> np.ndarray:
    """Pairwise distances: Euclidean for planar, great-circle km for lon-lat."""
    c = locs.coords
    if locs.mode == "planar":
        d = cdist(c, c)
    else:
        lon, lat = np.radians(c[:, 0]), np.radians(c[:, 1])
        cosang = (np.sin(lat)[:, None] * np.sin(lat)[None, :]
                  + np.cos(lat)[:, None] * np.cos(lat)[None, :]
                  * np.cos(lon[:, None] - lon[None, :]))
        d = EARTH_RADIUS_KM * np.arccos(np.clip(cosang, -1.0, 1.0))
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def exp_covariogram(dist, phi, sigma_w=1.0) -> np.ndarray:
    """``sigma_w**2 * exp(-dist / phi)`` elementwise."""
    if not phi > 0:
        raise ConfigError(f"range phi must be positive, got {phi}")
    if not sigma_w > 0:
        raise ConfigError(f"sigma_w must be positive, got {sigma_w}")
    return sigma_w ** 2 * np.exp(-np.asarray(dist, dtype=float) / phi)


def matrix_sqrt(Sigma) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == Sigma``.

    Raises
    ------
    FactorizationError
        If ``Sigma`` is not positive definite; ``pivot`` holds the 0-based
        index of the first non-positive pivot.
    """
    S = np.asarray(Sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ConfigError(f"Sigma must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise FactorizationError("Sigma has non-finite entries")
    L, info = lapack.dpotrf(S, lower=1, clean=1)
    if info > 0:
        raise FactorizationError(
            f"matrix is not positive definite (pivot {info - 1} is not positive)", pivot=info - 1
        )
    if info < 0:  # pragma: no cover
        raise FactorizationError(f"dpotrf argument {-info} is invalid")
    return L
