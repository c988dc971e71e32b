"""Gaussian mixtures fit by EM, with BIC model selection.

The EM implementation keeps the per-iteration log-likelihood trace so the
monotonicity of the algorithm is observable, and treats covariance collapse
explicitly: one retry with a small diagonal regularization, then failure.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .errors import CovarianceCollapseError, DimensionMismatchError

__all__ = [
    "GmmModel",
    "gmm_fit",
    "bic",
    "responsibilities",
    "assign_spatial_clusters",
    "select_n_clusters",
    "SelectionResult",
]

_WEIGHT_FLOOR = 1e-12
_REG_FACTOR = 1e-6


class _Collapse(Exception):
    """Internal: covariance not positive definite during EM."""


@dataclass(frozen=True)
class GmmModel:
    """Fitted mixture. covariances is (n, D, D) for full covariance or
    (n, D) diagonals; log_likelihood is the total training log-likelihood
    and log_likelihood_path its per-iteration trace."""

    n_components: int
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    covariance_type: str
    log_likelihood: float
    log_likelihood_path: np.ndarray = field(repr=False)
    converged: bool = True

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_components": self.n_components,
                "weights": self.weights.tolist(),
                "means": self.means.tolist(),
                "covariances": self.covariances.tolist(),
                "covariance_type": self.covariance_type,
                "log_likelihood": self.log_likelihood,
                "log_likelihood_path": self.log_likelihood_path.tolist(),
                "converged": self.converged,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "GmmModel":
        raw = json.loads(text)
        return cls(
            n_components=int(raw["n_components"]),
            weights=np.asarray(raw["weights"], dtype=np.float64),
            means=np.asarray(raw["means"], dtype=np.float64),
            covariances=np.asarray(raw["covariances"], dtype=np.float64),
            covariance_type=str(raw["covariance_type"]),
            log_likelihood=float(raw["log_likelihood"]),
            log_likelihood_path=np.asarray(raw["log_likelihood_path"], dtype=np.float64),
            converged=bool(raw["converged"]),
        )


def _check_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("data must be a 2-d array")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    return x


def _log_gaussians(x: np.ndarray, means: np.ndarray, covs: np.ndarray, cov_type: str) -> np.ndarray:
    """(M, n) matrix of per-component log densities."""
    m, d = x.shape
    n = len(means)
    out = np.empty((m, n))
    if cov_type == "diag":
        if np.any(covs <= 0.0):
            raise _Collapse
        for c in range(n):
            z = (x - means[c]) / np.sqrt(covs[c])
            out[:, c] = -0.5 * (
                d * math.log(2.0 * math.pi) + np.sum(np.log(covs[c])) + np.sum(z * z, axis=1)
            )
        return out
    for c in range(n):
        try:
            chol = linalg.cholesky(covs[c], lower=True)
        except linalg.LinAlgError:
            raise _Collapse from None
        y = linalg.solve_triangular(chol, (x - means[c]).T, lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, c] = -0.5 * (d * math.log(2.0 * math.pi) + logdet + np.sum(y * y, axis=0))
    return out


def _kmeanspp_centers(x: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centers by squared-distance sampling."""
    m = len(x)
    centers = np.empty((n, x.shape[1]))
    centers[0] = x[rng.integers(m)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, n):
        total = d2.sum()
        if total <= 0.0:
            centers[c:] = x[rng.integers(m, size=n - c)]
            break
        probs = d2 / total
        centers[c] = x[rng.choice(m, p=probs)]
        d2 = np.minimum(d2, np.sum((x - centers[c]) ** 2, axis=1))
    return centers


def _em(
    x: np.ndarray,
    n_components: int,
    rng_seed: int,
    cov_type: str,
    max_iter: int,
    tol: float,
    reg: float,
) -> GmmModel:
    m, d = x.shape
    rng = np.random.default_rng(rng_seed)
    means = _kmeanspp_centers(x, n_components, rng)
    global_cov = np.cov(x, rowvar=False, ddof=0).reshape(d, d)
    if cov_type == "diag":
        covs = np.tile(np.maximum(np.diag(global_cov), _WEIGHT_FLOOR) + reg, (n_components, 1))
    else:
        covs = np.tile(global_cov + reg * np.eye(d), (n_components, 1, 1))
    weights = np.full(n_components, 1.0 / n_components)

    path = []
    prev = -np.inf
    converged = False
    for _ in range(max_iter):
        log_prob = _log_gaussians(x, means, covs, cov_type) + np.log(weights)
        log_norm = logsumexp(log_prob, axis=1)
        ll = float(np.sum(log_norm))
        path.append(ll)
        resp = np.exp(log_prob - log_norm[:, None])

        if prev > -np.inf and ll - prev <= tol * abs(prev):
            converged = True
            break
        prev = ll

        counts = resp.sum(axis=0)
        if np.any(counts < _WEIGHT_FLOOR * m):
            raise _Collapse
        weights = counts / m
        means = (resp.T @ x) / counts[:, None]
        if cov_type == "diag":
            for c in range(n_components):
                diff = x - means[c]
                covs[c] = (resp[:, c] @ (diff * diff)) / counts[c] + reg
        else:
            for c in range(n_components):
                diff = x - means[c]
                cov = (resp[:, c, None] * diff).T @ diff / counts[c]
                covs[c] = 0.5 * (cov + cov.T) + reg * np.eye(d)

    return GmmModel(
        n_components=n_components,
        weights=weights,
        means=means,
        covariances=covs,
        covariance_type=cov_type,
        log_likelihood=path[-1],
        log_likelihood_path=np.asarray(path),
        converged=converged,
    )


def gmm_fit(
    data,
    n_components: int,
    seed: int = 0,
    covariance: str = "full",
    max_iter: int = 500,
    tol: float = 1e-6,
) -> GmmModel:
    """Fit a Gaussian mixture by EM from a k-means++ seeding.

    Convergence is declared when the relative log-likelihood improvement
    drops below tol. A singular covariance triggers one retry with the
    diagonal regularized by 1e-6 of the mean data variance; a second
    failure raises CovarianceCollapseError.
    """
    x = _check_data(data)
    if not 1 <= n_components <= len(x):
        raise ValueError("n_components must lie in [1, n_samples]")
    if covariance not in ("full", "diag"):
        raise ValueError("covariance must be 'full' or 'diag'")

    try:
        return _em(x, n_components, seed, covariance, max_iter, tol, reg=0.0)
    except _Collapse:
        pass
    reg = _REG_FACTOR * float(np.mean(np.var(x, axis=0)))
    if reg <= 0.0:
        reg = _REG_FACTOR
    try:
        return _em(x, n_components, seed, covariance, max_iter, tol, reg=reg)
    except _Collapse:
        raise CovarianceCollapseError(
            f"covariance collapsed for n_components={n_components} even after "
            f"diagonal regularization {reg:g}"
        ) from None


def _n_parameters(model: GmmModel) -> int:
    n, d = model.n_components, model.dim
    if model.covariance_type == "diag":
        return (n - 1) + n * d + n * d
    return (n - 1) + n * d + n * d * (d + 1) // 2


def bic(model: GmmModel, data) -> float:
    """Bayesian information criterion p*ln(M) - 2*logL on the given data."""
    x = _check_data(data)
    if x.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"data width {x.shape[1]} does not match model dimension {model.dim}"
        )
    log_prob = _log_gaussians(x, model.means, model.covariances, model.covariance_type)
    ll = float(np.sum(logsumexp(log_prob + np.log(model.weights), axis=1)))
    return _n_parameters(model) * math.log(len(x)) - 2.0 * ll


def responsibilities(model: GmmModel, data) -> np.ndarray:
    """Posterior component probabilities, one row per sample (rows sum to 1)."""
    x = _check_data(data)
    if x.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"data width {x.shape[1]} does not match model dimension {model.dim}"
        )
    log_prob = _log_gaussians(x, model.means, model.covariances, model.covariance_type)
    log_prob += np.log(model.weights)
    return np.exp(log_prob - logsumexp(log_prob, axis=1)[:, None])


def assign_spatial_clusters(model: GmmModel, features) -> np.ndarray:
    """Hard labels by maximum posterior probability."""
    return np.argmax(responsibilities(model, features), axis=1)


@dataclass(frozen=True)
class SelectionResult:
    best_n: int
    bic_curve: list  # (n_components, bic) pairs, skipped candidates absent
    best_model: GmmModel


def select_n_clusters(
    data,
    candidates,
    seeds_per_candidate: int = 5,
    base_seed: int = 0,
    covariance: str = "full",
    max_iter: int = 500,
    tol: float = 1e-6,
) -> SelectionResult:
    """Pick the component count minimizing BIC.

    Each candidate is fit from seeds_per_candidate k-means++ seedings and
    the best likelihood kept. Candidates whose fits all fail are skipped
    with a warning. Ties resolve to the smaller count.
    """
    x = _check_data(data)
    candidates = sorted(set(int(n) for n in candidates))
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if seeds_per_candidate < 1:
        raise ValueError("seeds_per_candidate must be >= 1")

    curve = []
    best = None
    for pos, n in enumerate(candidates):
        model = None
        for s in range(seeds_per_candidate):
            seed = base_seed + pos * seeds_per_candidate + s
            try:
                cand = gmm_fit(x, n, seed=seed, covariance=covariance, max_iter=max_iter, tol=tol)
            except CovarianceCollapseError:
                continue
            if model is None or cand.log_likelihood > model.log_likelihood:
                model = cand
        if model is None:
            warnings.warn(f"all fits failed for n_components={n}; candidate skipped")
            continue
        score = bic(model, x)
        curve.append((n, score))
        if best is None or score < best[1]:
            best = (n, score, model)
    if best is None:
        raise CovarianceCollapseError("every candidate component count failed to fit")
    return SelectionResult(best_n=best[0], bic_curve=curve, best_model=best[2])
