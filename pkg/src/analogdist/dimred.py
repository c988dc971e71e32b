"""Orthogonal (EOF) bases, catalog-scale statistics, and the dimension budget
that decides how many components an analog catalog of a given size can
support.

The budget compares the typical rank-k analog distance, which grows like
rho_bar * (k / L_eff)**(1/d), against a tolerated fraction epsilon of the
root-mean-square distance between random catalog members. Solving for d
gives the admissible dimension

    dmax_k = log(L_eff / k) / log(rho_bar / epsilon)
           = dmax_1 * (1 - log k / log L_eff).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog
from .dimension import estimate_local_dimension
from .errors import DimensionMismatchError, RankDeficientWarning
from .neighbors import NeighborIndex

__all__ = [
    "EofBasis",
    "eof_fit",
    "project",
    "reconstruct",
    "rmsd",
    "dmax_for_rank",
    "dmax_from_threshold",
    "ReductionCriterion",
    "ScanRow",
    "criterion_scan",
]

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class EofBasis:
    """Orthonormal components ordered by decreasing explained variance.

    Signs are normalized so each component's largest-magnitude entry is
    positive, making the fit deterministic.
    """

    mean_state: np.ndarray
    components: np.ndarray  # (n, D), rows orthonormal
    explained_variance: np.ndarray  # (n,)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, Catalog):
        return data.states
    out = np.asarray(data, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError("data must be a 2-d array or Catalog")
    return out


def eof_fit(data, n_components: int) -> EofBasis:
    """Fit an orthonormal basis by SVD of the centred data.

    Warns with RankDeficientWarning when the requested components reach into
    the numerical null space (trailing variance below 1e-12 of the leading).
    """
    x = _as_matrix(data)
    n_rows, dim = x.shape
    if n_rows < 2:
        raise ValueError("need at least two rows to estimate variance")
    if not 1 <= n_components <= min(n_rows, dim):
        raise ValueError(
            f"n_components must lie in [1, {min(n_rows, dim)}], got {n_components}"
        )
    mean_state = x.mean(axis=0)
    _, svals, vt = np.linalg.svd(x - mean_state, full_matrices=False)
    explained = svals**2 / (n_rows - 1)
    components = vt[:n_components].copy()
    explained = explained[:n_components].copy()

    # Sign convention: largest-magnitude entry of each component positive.
    for row in components:
        peak = np.argmax(np.abs(row))
        if row[peak] < 0.0:
            row *= -1.0

    if explained[-1] < _RANK_TOL * max(explained[0], np.finfo(float).tiny):
        warnings.warn(
            "requested components extend into the null space of the data",
            RankDeficientWarning,
            stacklevel=2,
        )
    return EofBasis(mean_state=mean_state, components=components, explained_variance=explained)


def _check_n(basis: EofBasis, n: int | None) -> int:
    if n is None:
        return basis.n_components
    if not 1 <= n <= basis.n_components:
        raise ValueError(f"n must lie in [1, {basis.n_components}]")
    return n


def project(basis: EofBasis, states, n: int | None = None) -> np.ndarray:
    """Coordinates of states in the first n components (non-expansive map)."""
    x = np.asarray(states, dtype=np.float64)
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != basis.dim:
        raise DimensionMismatchError(
            f"states have width {x.shape[1]}, basis expects {basis.dim}"
        )
    n = _check_n(basis, n)
    out = (x - basis.mean_state) @ basis.components[:n].T
    return out[0] if squeeze else out


def reconstruct(basis: EofBasis, reduced) -> np.ndarray:
    """Map reduced coordinates back to state space (adds the mean back)."""
    y = np.asarray(reduced, dtype=np.float64)
    squeeze = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] > basis.n_components:
        raise DimensionMismatchError(
            f"reduced width {y.shape[1]} exceeds basis components {basis.n_components}"
        )
    out = basis.mean_state + y @ basis.components[: y.shape[1]]
    return out[0] if squeeze else out


def rmsd(data, n_pairs: int = 100_000, seed: int = 0) -> float:
    """Root-mean-square distance between random distinct pairs of rows."""
    x = _as_matrix(data)
    n_rows = len(x)
    if n_rows < 2:
        raise ValueError("need at least two rows")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    left = rng.integers(0, n_rows, size=n_pairs)
    right = rng.integers(0, n_rows, size=n_pairs)
    clash = left == right
    while np.any(clash):
        right[clash] = rng.integers(0, n_rows, size=int(clash.sum()))
        clash = left == right
    diff = x[left] - x[right]
    return float(np.sqrt(np.mean(np.einsum("ij,ij->i", diff, diff))))


def dmax_for_rank(dmax_first: float, catalog_size: int, rank: int) -> float:
    """Admissible dimension for the rank-k analog given the rank-1 budget."""
    if not dmax_first > 0.0:
        raise ValueError("dmax_first must be positive")
    if catalog_size < 2:
        raise ValueError("catalog_size must be >= 2")
    if not 1 <= rank <= catalog_size:
        raise ValueError("rank must lie in [1, catalog_size]")
    return dmax_first * (1.0 - math.log(rank) / math.log(catalog_size))


def dmax_from_threshold(epsilon: float, rho_bar: float, catalog_size: int, rank: int) -> float:
    """Admissible dimension from the distance criterion
    rho_bar * (rank / catalog_size)**(1/d) < epsilon.

    Returns +inf when epsilon >= rho_bar (the criterion holds for any d).
    """
    if not epsilon > 0.0 or not rho_bar > 0.0:
        raise ValueError("epsilon and rho_bar must be positive")
    if catalog_size < 2:
        raise ValueError("catalog_size must be >= 2")
    if not 1 <= rank <= catalog_size:
        raise ValueError("rank must lie in [1, catalog_size]")
    if epsilon >= rho_bar:
        return math.inf
    return math.log(catalog_size / rank) / math.log(rho_bar / epsilon)


@dataclass(frozen=True)
class ReductionCriterion:
    """Pass/fail rule for truncated catalogs.

    epsilon: tolerated mean analog distance as a fraction of the RMSD.
    rank: which analog's mean distance is constrained.
    l_eff: effective (decorrelated) catalog size entering the theory line;
        None resolves to length/24, i.e. roughly daily decorrelation for
        hourly catalogs.
    rho_bar: typical density rescaling of targets, usually in 0.4-0.7.
    """

    epsilon: float
    rank: int = 25
    l_eff: int | None = None
    rho_bar: float = 0.55

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.l_eff is not None and self.l_eff < 2:
            raise ValueError("l_eff must be >= 2")
        if not self.rho_bar > 0.0:
            raise ValueError("rho_bar must be positive")


@dataclass(frozen=True)
class ScanRow:
    """One EOF count of a criterion scan."""

    n_eof: int
    mean_dim: float
    ratio: float
    passed: bool
    dmax_theory: float


def criterion_scan(
    data,
    criterion: ReductionCriterion,
    eof_counts,
    n_analogs: int = 40,
    n_targets: int = 200,
    seed: int = 0,
    rmsd_pairs: int = 50_000,
) -> list[ScanRow]:
    """Evaluate the reduction criterion across EOF truncations.

    For each count, the catalog is projected on its leading components, the
    local dimension is estimated at n_analogs analogs over a fixed random
    target subset, and the mean rank-``criterion.rank`` distance is compared
    with the RMSD of the projected catalog. Targets, RMSD pairs, and the
    basis are shared across counts so rows differ only by truncation.
    """
    x = _as_matrix(data)
    n_rows = len(x)
    counts = sorted(set(int(n) for n in eof_counts))
    if not counts:
        raise ValueError("eof_counts must be non-empty")
    if counts[0] < 1 or counts[-1] > min(n_rows, x.shape[1]):
        raise ValueError("eof_counts out of range for the data")
    k_query = max(n_analogs, criterion.rank)
    if k_query + 1 > n_rows:
        raise ValueError("catalog too small for the requested analog count")

    l_eff = criterion.l_eff if criterion.l_eff is not None else max(2, n_rows // 24)
    dmax_theory = dmax_from_threshold(
        criterion.epsilon, criterion.rho_bar, l_eff, criterion.rank
    )

    rng = np.random.default_rng(seed)
    targets = rng.choice(n_rows, size=min(n_targets, n_rows), replace=False)
    basis = eof_fit(x, counts[-1])

    rows = []
    for n in counts:
        reduced = project(basis, x, n)
        scale = rmsd(reduced, n_pairs=rmsd_pairs, seed=seed)
        index = NeighborIndex(Catalog(reduced), backend="auto")
        dims = np.empty(len(targets))
        rank_dist = np.empty(len(targets))
        for j, t in enumerate(targets):
            analogs = index.query(reduced[t], k_query + 1).without_self_match(index=int(t))
            dims[j] = estimate_local_dimension(analogs.distances[:n_analogs]).dim
            rank_dist[j] = analogs.distances[criterion.rank - 1]
        ratio = float(np.mean(rank_dist)) / scale
        rows.append(
            ScanRow(
                n_eof=n,
                mean_dim=float(np.mean(dims)),
                ratio=ratio,
                passed=bool(ratio < criterion.epsilon),
                dmax_theory=dmax_theory,
            )
        )
    return rows
