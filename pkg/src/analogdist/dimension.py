"""Finite-resolution local dimension and power-law prefactor fits.

The dimension estimate inverts the mean log distance ratio between the
largest-rank analog and all closer ones, which is the maximum-likelihood
exponent of an exponential fit to those log ratios. The prefactor fit is a
least-squares fit of log distances against (1/d) log rank with fixed slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistancesError
from .neighbors import AnalogSet

__all__ = [
    "LocalDimEstimate",
    "PrefactorFit",
    "estimate_local_dimension",
    "fit_prefactor",
    "rescale_distances",
    "DEFAULT_N_ANALOGS",
    "DEFAULT_N_ANALOGS_SHORT",
]

# Analog counts used by the experiment drivers: the long setting for dense
# reference catalogs, the short one for weather-scale catalogs.
DEFAULT_N_ANALOGS = 150
DEFAULT_N_ANALOGS_SHORT = 40


@dataclass(frozen=True)
class LocalDimEstimate:
    """dim: estimated local dimension at resolution ``resolution`` (the
    largest analog distance used); n_analogs: number of ranks consumed."""

    dim: float
    n_analogs: int
    resolution: float


@dataclass(frozen=True)
class PrefactorFit:
    """prefactor: fitted C in r_k ~ C * k**(1/dim); rescaling: prefactor
    expressed in units of the catalog density, C * L**(1/dim); residual:
    RMS of the log-space fit residuals."""

    prefactor: float
    rescaling: float
    residual: float


def _distances(analogs: AnalogSet | np.ndarray) -> np.ndarray:
    if isinstance(analogs, AnalogSet):
        return analogs.distances
    return np.asarray(analogs, dtype=np.float64)


def estimate_local_dimension(analogs: AnalogSet | np.ndarray) -> LocalDimEstimate:
    """Local dimension from sorted analog distances.

    Requires at least 3 strictly positive distances; a zero distance means
    the target itself sits in the catalog and must be removed upstream
    (AnalogSet.without_self_match). Raises DegenerateDistancesError when the
    distances are tied at the largest rank and carry no scaling information.
    """
    r = _distances(analogs)
    n = len(r)
    if n < 3:
        raise ValueError(f"need at least 3 analogs, got {n}")
    if np.any(r <= 0.0):
        raise ValueError("all distances must be positive; drop self-matches first")
    r_top = r[-1]
    if r[-2] >= r_top:
        raise DegenerateDistancesError(
            "largest-rank distance is tied; no scale separation between analogs"
        )
    mean_log_ratio = float(np.mean(np.log(r_top / r[:-1])))
    return LocalDimEstimate(dim=1.0 / mean_log_ratio, n_analogs=n, resolution=float(r_top))


def fit_prefactor(analogs: AnalogSet | np.ndarray, dim: float, catalog_size: int) -> PrefactorFit:
    """Least-squares prefactor of r_k ~ C * k**(1/dim) in log space.

    The slope 1/dim is held fixed, so the optimum is the mean of
    log(r_k) - (1/dim) log(k). catalog_size converts the prefactor into the
    density-free rescaling C * catalog_size**(1/dim).
    """
    r = _distances(analogs)
    if len(r) < 1:
        raise ValueError("need at least one analog")
    if np.any(r <= 0.0):
        raise ValueError("all distances must be positive")
    if not dim > 0.0:
        raise ValueError("dim must be positive")
    if catalog_size < len(r):
        raise ValueError("catalog_size cannot be smaller than the analog count")
    k = np.arange(1, len(r) + 1, dtype=np.float64)
    resid = np.log(r) - np.log(k) / dim
    log_c = float(np.mean(resid))
    residual = float(np.sqrt(np.mean((resid - log_c) ** 2)))
    prefactor = math.exp(log_c)
    rescaling = prefactor * catalog_size ** (1.0 / dim)
    return PrefactorFit(prefactor=prefactor, rescaling=rescaling, residual=residual)


def rescale_distances(analogs: AnalogSet | np.ndarray, dim: float, prefactor: float) -> np.ndarray:
    """Centred, rank-normalized distances d*sqrt(k)*(r_k/(C k**(1/dim)) - 1).

    In the large-catalog limit these fluctuations approach a standard normal
    as the rank grows, making curves for different ranks comparable.
    """
    r = _distances(analogs)
    if not dim > 0.0 or not prefactor > 0.0:
        raise ValueError("dim and prefactor must be positive")
    k = np.arange(1, len(r) + 1, dtype=np.float64)
    return dim * np.sqrt(k) * (r / (prefactor * k ** (1.0 / dim)) - 1.0)
