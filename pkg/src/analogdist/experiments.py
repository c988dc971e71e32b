"""Experiment drivers: seeded pipelines that write CSV, SVG, and manifests.

Each driver takes its output location first, runs one self-contained
experiment, writes versioned CSV artifacts plus minimal SVG renderings of
them, and drops a manifest recording parameters, seeds, and output hashes.
Drivers are deterministic functions of their arguments, so re-running from
a manifest reproduces every artifact bit for bit. Monte Carlo work is
spread over a thread pool (numpy and the k-d tree release the GIL) but
merged in catalog-index order, keeping results independent of the worker
count; ANALOG_DIST_THREADS caps the pool.
"""

from __future__ import annotations

import csv as _csvmod
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .catalog import (
    Catalog,
    ExclusionPolicy,
    load_catalog,
    save_catalog,
    subsample_without_replacement,
)
from .clustering import assign_spatial_clusters, select_n_clusters
from .density import gaussian_kde, gaussian_smooth, ks_test, wasserstein1
from .dimension import estimate_local_dimension, fit_prefactor, rescale_distances
from .dimred import ReductionCriterion, criterion_scan, eof_fit, project
from .disttheory import (
    DistParams,
    distance_mean,
    distance_mean_approx,
    distance_mode,
    distance_pdf,
    distance_survival,
    distance_variance,
    rescaled_pdf,
)
from .lorenz import generate_trajectory
from .manifest import build_manifest, load_manifest, save_manifest, verify_outputs
from .neighbors import AnalogSet, NeighborIndex
from .surrogate import traveling_modes_surrogate
from .svgplot import line_plot

__all__ = [
    "ExperimentResult",
    "worker_count",
    "write_csv",
    "run_gen_l63",
    "run_gen_surrogate",
    "run_theory_curves",
    "run_fit_target",
    "run_mc_distances",
    "run_rescaled_density",
    "run_dmax_scan",
    "run_cluster",
    "run_dim_stats",
    "run_rerun",
    "RUNNERS",
]

CSV_SCHEMA = "analogdist-csv/v1"
_DENSITY_GRID = 512


@dataclass(frozen=True)
class ExperimentResult:
    """What a driver produced: artifact paths, the manifest, and a printable summary."""

    command: str
    outputs: tuple[Path, ...]
    manifest_path: Path
    summary: tuple[str, ...]


def worker_count() -> int:
    """Thread-pool size: ANALOG_DIST_THREADS if set, else cpu count capped at 8."""
    env = os.environ.get("ANALOG_DIST_THREADS")
    if env is not None:
        n = int(env)
        if n < 1:
            raise ValueError("ANALOG_DIST_THREADS must be >= 1")
        return n
    return min(8, os.cpu_count() or 1)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


def write_csv(path, name: str, columns: dict) -> Path:
    """Write named columns as CSV with a schema comment line.

    Floats are rendered with repr (shortest round-trip form) and NaN as an
    empty cell, so output bytes are a pure function of the values.
    """
    cols = {key: list(values) for key, values in columns.items()}
    lengths = {len(v) for v in cols.values()}
    if len(lengths) != 1:
        raise ValueError("CSV columns must all have the same length")
    buf = io.StringIO()
    writer = _csvmod.writer(buf, lineterminator="\n")
    writer.writerow(cols.keys())
    for i in range(lengths.pop()):
        writer.writerow([_cell(v[i]) for v in cols.values()])
    path = Path(path)
    path.write_text(f"# {CSV_SCHEMA} {name}\n" + buf.getvalue(), encoding="utf-8")
    return path


def _write_svg(path, svg_text: str) -> Path:
    path = Path(path)
    path.write_text(svg_text, encoding="utf-8")
    return path


def _ensure_dir(out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sidecar(out: Path) -> Path:
    return Path(str(out) + ".manifest.json")


def _finish(command, parameters, outputs, manifest_path, summary) -> ExperimentResult:
    manifest_path = Path(manifest_path)
    manifest = build_manifest(command, parameters, outputs, base_dir=manifest_path.parent)
    save_manifest(manifest, manifest_path)
    return ExperimentResult(
        command=command,
        outputs=tuple(Path(p) for p in outputs),
        manifest_path=manifest_path,
        summary=tuple(summary),
    )


def _with_times(cat: Catalog) -> Catalog:
    if cat.times is not None:
        return cat
    return Catalog(cat.states, np.arange(len(cat), dtype=np.int64), cat.name, cat.units)


def _unit_params(rank: int, dim: float, catalog_size: int) -> DistParams:
    """Parameters whose law reduces to the catalog-size-free form.

    Setting the physical scale to L^(1/d) cancels the size dependence, so
    distances x = r / C follow d x^(dk-1) exp(-x^d) / Gamma(k) regardless
    of L while the k <= L invariant stays honored.
    """
    return DistParams(
        rank=rank, dim=dim, catalog_size=catalog_size, scale=float(catalog_size) ** (1.0 / dim)
    )


def _query_analogs(index: NeighborIndex, cat: Catalog, row: int, k: int, gap: int) -> AnalogSet:
    """k analogs of catalog row `row`, never counting the row itself.

    With a positive gap the temporal-exclusion policy handles the self
    match (its time offset is zero); otherwise the row is dropped by index
    and the set trimmed back to k.
    """
    if gap > 0:
        policy = ExclusionPolicy(min_target_gap=gap)
        return index.query(cat.states[row], k, policy, target_time=int(cat.times[row]))
    found = index.query(cat.states[row], k + 1).without_self_match(index=row)
    return AnalogSet(found.target, found.distances[:k], found.indices[:k])


# ---------------------------------------------------------------------------
# catalog generation


def run_gen_l63(out, n=20_000, dt=0.01, burn_in=10_000, stride=1, seed=None) -> ExperimentResult:
    """Integrate the three-variable convection system and save the samples."""
    out = Path(out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    parameters = {
        "out": str(out),
        "n": int(n),
        "dt": float(dt),
        "burn_in": int(burn_in),
        "stride": int(stride),
        "seed": None if seed is None else int(seed),
    }
    traj = generate_trajectory(n_steps=int(n), dt=dt, burn_in=int(burn_in), stride=int(stride), seed=seed)
    cat = Catalog(
        states=traj.states,
        times=np.arange(len(traj.states), dtype=np.int64),
        name="lorenz-63",
        units="model units",
    )
    save_catalog(cat, out)
    mean = cat.states.mean(axis=0)
    std = cat.states.std(axis=0, ddof=1)
    summary = [
        f"wrote {out}: L={cat.length} D={cat.dim} (dt={dt:g}, stride={stride}, burn_in={burn_in})",
        "coordinate mean/std: "
        + "  ".join(f"{m:.3f}/{s:.3f}" for m, s in zip(mean, std)),
    ]
    return _finish("gen-l63", parameters, [out], _sidecar(out), summary)


def run_gen_surrogate(
    out,
    modes,
    grid=64,
    n=30_000,
    noise=1e-3,
    seed=0,
    components=1,
    decay=0.85,
) -> ExperimentResult:
    """Save a traveling-modes surrogate catalog with known effective dimension."""
    out = Path(out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    parameters = {
        "out": str(out),
        "modes": int(modes),
        "grid": int(grid),
        "n": int(n),
        "noise": float(noise),
        "seed": int(seed),
        "components": int(components),
        "decay": float(decay),
    }
    cat = traveling_modes_surrogate(
        int(modes),
        n_grid=int(grid),
        n_samples=int(n),
        noise=float(noise),
        seed=int(seed),
        n_components=int(components),
        amplitude_decay=float(decay),
    )
    save_catalog(cat, out)
    summary = [
        f"wrote {out}: L={cat.length} D={cat.dim} ({modes} modes, decay {decay:g}, noise {noise:g})",
    ]
    return _finish("gen-surrogate", parameters, [out], _sidecar(out), summary)


# ---------------------------------------------------------------------------
# theory curves


def run_theory_curves(
    out,
    k_list=(1, 5, 30),
    d_list=(1.3, 2.0, 5.0),
    catalog_size=100_000,
    grid_points=_DENSITY_GRID,
) -> ExperimentResult:
    """Tabulate rank-distance densities in catalog-size-free coordinates.

    Distances are expressed as x = r * L^(1/d), which collapses every
    catalog size onto the unit-catalog law; densities are normalized by
    their maximum so curves of different rank share one vertical scale.
    Mean, approximate mean, and mode markers are tabulated alongside.
    """
    out = _ensure_dir(out)
    k_list = tuple(int(k) for k in k_list)
    d_list = tuple(float(d) for d in d_list)
    parameters = {
        "out": str(out),
        "k_list": list(k_list),
        "d_list": list(d_list),
        "catalog_size": int(catalog_size),
        "grid_points": int(grid_points),
    }

    series, d_col, k_col, x_col, y_col = [], [], [], [], []
    marker_cols = {"d": [], "k": [], "mean": [], "mean_approx": [], "mode": []}
    for d in d_list:
        x_max = 0.0
        for k in k_list:
            unit = _unit_params(k, d, int(catalog_size))
            x_max = max(x_max, distance_mean(unit) + 5.0 * math.sqrt(distance_variance(unit)))
        grid = np.linspace(0.0, x_max, int(grid_points))
        to_r = float(catalog_size) ** (-1.0 / d)
        for k in k_list:
            p = DistParams(rank=k, dim=d, catalog_size=int(catalog_size))
            pdf = np.asarray(distance_pdf(grid * to_r, p))
            finite = np.isfinite(pdf)
            top = pdf[finite].max()
            normed = np.where(finite, pdf / top, np.nan)
            label = f"d={d:g} k={k}"
            series.extend([label] * len(grid))
            d_col.extend([d] * len(grid))
            k_col.extend([k] * len(grid))
            x_col.extend(grid.tolist())
            y_col.extend(normed.tolist())
            marker_cols["d"].append(d)
            marker_cols["k"].append(k)
            marker_cols["mean"].append(distance_mean(p) / to_r)
            marker_cols["mean_approx"].append(distance_mean_approx(p) / to_r)
            marker_cols["mode"].append(distance_mode(p) / to_r)

    curves = write_csv(
        out / "curves.csv",
        "theory-curves",
        {"series": series, "d": d_col, "k": k_col, "x": x_col, "density": y_col},
    )
    markers = write_csv(out / "markers.csv", "theory-markers", marker_cols)
    svg = _write_svg(
        out / "curves.svg",
        line_plot(
            curves.read_text(encoding="utf-8"),
            "x",
            "density",
            group="series",
            title="Rank-distance densities (catalog-size-free units)",
            x_label="r * L^(1/d)",
            y_label="p_k / max p_k",
        ),
    )
    summary = [
        f"tabulated {len(k_list) * len(d_list)} curves on {grid_points}-point grids",
        f"wrote {curves.name}, {markers.name}, {svg.name} in {out}",
    ]
    return _finish(
        "theory-curves", parameters, [curves, markers, svg], out / "manifest.json", summary
    )


# ---------------------------------------------------------------------------
# single-target fit


def run_fit_target(out, catalog, target_index, n_analogs=40, exclusion_gap=0) -> ExperimentResult:
    """Fit the power-law distance profile r_k ~ C k^(1/d) at one target."""
    out = _ensure_dir(out)
    cat = load_catalog(catalog)
    target_index = int(target_index)
    n_analogs = int(n_analogs)
    if not 0 <= target_index < len(cat):
        raise ValueError(f"target_index {target_index} outside catalog of length {len(cat)}")
    parameters = {
        "out": str(out),
        "catalog": str(catalog),
        "target_index": target_index,
        "n_analogs": n_analogs,
        "exclusion_gap": int(exclusion_gap),
    }

    index = NeighborIndex(cat)
    analogs = _query_analogs(index, cat, target_index, n_analogs, int(exclusion_gap))
    est = estimate_local_dimension(analogs)
    fit = fit_prefactor(analogs, est.dim, len(cat))

    ranks = np.arange(1, n_analogs + 1, dtype=np.float64)
    curve = fit.prefactor * ranks ** (1.0 / est.dim)
    band = curve / (est.dim * np.sqrt(ranks))
    fit_csv = write_csv(
        out / "fit.csv",
        "fit-target",
        {
            "series": ["observed"] * n_analogs
            + ["fit"] * n_analogs
            + ["fit-std"] * n_analogs
            + ["fit+std"] * n_analogs,
            "k": np.tile(ranks, 4),
            "distance": np.concatenate([analogs.distances, curve, curve - band, curve + band]),
        },
    )
    summary_csv = write_csv(
        out / "summary.csv",
        "fit-target-summary",
        {
            "target_index": [target_index],
            "n_analogs": [n_analogs],
            "catalog_size": [len(cat)],
            "dim": [est.dim],
            "prefactor": [fit.prefactor],
            "rescaling": [fit.rescaling],
            "residual": [fit.residual],
        },
    )
    svg = _write_svg(
        out / "fit.svg",
        line_plot(
            fit_csv.read_text(encoding="utf-8"),
            "k",
            "distance",
            group="series",
            dashed=("fit-std", "fit+std"),
            title=f"Analog distances at target {target_index}",
            x_label="rank k",
            y_label="distance",
        ),
    )
    summary = [
        f"target {target_index}: dim={est.dim:.3f} prefactor={fit.prefactor:.4g} "
        f"rescaling={fit.rescaling:.4g} (residual {fit.residual:.3g})",
    ]
    return _finish(
        "fit-target", parameters, [fit_csv, summary_csv, svg], out / "manifest.json", summary
    )


# ---------------------------------------------------------------------------
# Monte Carlo over catalogs


def _kde_columns(samples_by_label: dict, bandwidth: float, theory=None):
    """Shared-grid KDE curves (plus optional closed-form overlays) in long form."""
    pooled = np.concatenate(list(samples_by_label.values()))
    lo = pooled.min() - 4.0 * bandwidth
    hi = pooled.max() + 4.0 * bandwidth
    grid = np.linspace(lo, hi, _DENSITY_GRID)
    series, xs, ys = [], [], []
    for label, samples in samples_by_label.items():
        kde = gaussian_kde(samples, bandwidth, grid)
        series.extend([label] * len(grid))
        xs.extend(grid.tolist())
        ys.extend(kde.values.tolist())
        if theory is not None:
            series.extend([f"{label} theory"] * len(grid))
            xs.extend(grid.tolist())
            ys.extend(np.asarray(theory(label, grid)).tolist())
    return {"series": series, "x": xs, "density": ys}


def run_mc_distances(
    out,
    catalog_source,
    l_list=(10_000, 100_000),
    n_catalogs=200,
    target_index=0,
    n_analogs_dim=150,
    k_markers=(1, 15, 30),
    bw_dim=0.15,
    bw_rho=4.0,
    bw_rescaled=0.3,
    seed=0,
) -> ExperimentResult:
    """Distance statistics of one target across independent random catalogs.

    For each requested size L, n_catalogs subsamples are drawn from the
    source catalog and the target's analog distances are collected. The
    local dimension is estimated per catalog and its pooled mean over all
    sizes fixes the exponent for every fit and overlay. Per size this
    yields the spread of the estimated dimension, the density rescaling
    rho = C L^(1/d) (whose distribution should not depend on L), and
    distances rescaled by the per-size mean prefactor to the unit-catalog
    law, compared with the closed-form density by a KS test at the marker
    ranks. Rescaling by the mean rather than each catalog's own prefactor
    keeps the catalog-to-catalog scale fluctuation in the samples; that
    fluctuation is part of what the closed-form law predicts, and dividing
    it out per catalog would deflate the sample variance.
    """
    out = _ensure_dir(out)
    source = load_catalog(catalog_source)
    l_list = tuple(int(v) for v in l_list)
    k_markers = tuple(sorted(int(k) for k in k_markers))
    n_catalogs = int(n_catalogs)
    target_index = int(target_index)
    n_analogs_dim = int(n_analogs_dim)
    seed = int(seed)
    if n_catalogs < 2:
        raise ValueError("n_catalogs must be >= 2")
    if not 0 <= target_index < len(source):
        raise ValueError(f"target_index {target_index} outside source of length {len(source)}")
    if k_markers and (k_markers[0] < 1 or k_markers[-1] > n_analogs_dim):
        raise ValueError("k_markers must lie within 1..n_analogs_dim")
    parameters = {
        "out": str(out),
        "catalog_source": str(catalog_source),
        "l_list": list(l_list),
        "n_catalogs": n_catalogs,
        "target_index": target_index,
        "n_analogs_dim": n_analogs_dim,
        "k_markers": list(k_markers),
        "bw_dim": float(bw_dim),
        "bw_rho": float(bw_rho),
        "bw_rescaled": float(bw_rescaled),
        "seed": seed,
    }

    target = source.states[target_index]
    k_top = n_analogs_dim

    def one_catalog(job):
        li, size, i = job
        sub = subsample_without_replacement(source, size, seed=seed + li * n_catalogs + i)
        found = NeighborIndex(sub).query(target, k_top + 1).without_self_match()
        trimmed = AnalogSet(found.target, found.distances[:k_top], found.indices[:k_top])
        return estimate_local_dimension(trimmed).dim, trimmed.distances

    jobs = [(li, size, i) for li, size in enumerate(l_list) for i in range(n_catalogs)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(one_catalog, jobs))

    # One exponent for everything downstream: the pooled mean keeps the KS
    # overlays and the rho distributions of every size on a common scale.
    dbar = float(np.mean([c[0] for c in results]))

    outputs = []
    cat_cols = {"L": [], "catalog": [], "dim": [], "prefactor": [], "rho": []}
    dims_by_label, rho_by_label = {}, {}
    rescaled: dict[int, dict[str, np.ndarray]] = {k: {} for k in k_markers}
    dbar_by_label = {}
    ks_cols = {"L": [], "k": [], "stat": [], "p_value": []}
    summary = []

    for li, size in enumerate(l_list):
        chunk = results[li * n_catalogs : (li + 1) * n_catalogs]
        dims = np.array([c[0] for c in chunk])
        dists = np.vstack([c[1] for c in chunk])
        prefs = np.array(
            [fit_prefactor(dists[i], dbar, size).prefactor for i in range(n_catalogs)]
        )
        rho = prefs * size ** (1.0 / dbar)
        label = f"L={size}"
        dims_by_label[label] = dims
        rho_by_label[label] = rho
        dbar_by_label[label] = (size, dbar)
        cat_cols["L"].extend([size] * n_catalogs)
        cat_cols["catalog"].extend(range(n_catalogs))
        cat_cols["dim"].extend(dims.tolist())
        cat_cols["prefactor"].extend(prefs.tolist())
        cat_cols["rho"].extend(rho.tolist())
        c_mean = float(prefs.mean())
        for k in k_markers:
            samples = dists[:, k - 1] / c_mean
            rescaled[k][label] = samples
            unit = _unit_params(k, dbar, size)
            stat, p = ks_test(samples, lambda v, unit=unit: 1.0 - distance_survival(v, unit))
            ks_cols["L"].append(size)
            ks_cols["k"].append(k)
            ks_cols["stat"].append(stat)
            ks_cols["p_value"].append(p)
        summary.append(
            f"L={size}: dim mean {dims.mean():.3f} std {dims.std(ddof=1):.3f}, "
            f"rho mean {rho.mean():.3f} std {rho.std(ddof=1):.3f}"
        )

    summary.insert(0, f"pooled dim {dbar:.4f} over {len(results)} catalogs")

    outputs.append(write_csv(out / "catalogs.csv", "mc-catalogs", cat_cols))
    outputs.append(write_csv(out / "ks.csv", "mc-ks-tests", ks_cols))

    overlap_cols = {"l_a": [], "l_b": [], "w1": [], "pooled_std": [], "ratio": []}
    for (la, ra), (lb, rb) in combinations(rho_by_label.items(), 2):
        w1 = wasserstein1(ra, rb)
        pooled_std = float(np.concatenate([ra, rb]).std(ddof=1))
        overlap_cols["l_a"].append(la)
        overlap_cols["l_b"].append(lb)
        overlap_cols["w1"].append(w1)
        overlap_cols["pooled_std"].append(pooled_std)
        overlap_cols["ratio"].append(w1 / pooled_std)
        summary.append(
            f"rho overlap {la} vs {lb}: W1={w1:.4g} ({w1 / pooled_std:.1%} of pooled std)"
        )
    if overlap_cols["l_a"]:
        outputs.append(write_csv(out / "rho_overlap.csv", "mc-rho-overlap", overlap_cols))

    dim_csv = write_csv(out / "dim_density.csv", "mc-dim-density", _kde_columns(dims_by_label, float(bw_dim)))
    rho_csv = write_csv(out / "rho_density.csv", "mc-rho-density", _kde_columns(rho_by_label, float(bw_rho)))
    outputs.extend([dim_csv, rho_csv])
    outputs.append(
        _write_svg(
            out / "dim.svg",
            line_plot(
                dim_csv.read_text(encoding="utf-8"),
                "x",
                "density",
                group="series",
                title="Estimated dimension across random catalogs",
                x_label="dim",
            ),
        )
    )
    outputs.append(
        _write_svg(
            out / "rho.svg",
            line_plot(
                rho_csv.read_text(encoding="utf-8"),
                "x",
                "density",
                group="series",
                title="Density rescaling rho across random catalogs",
                x_label="rho",
            ),
        )
    )
    for k in k_markers:
        def theory(label, grid, k=k):
            size, dbar = dbar_by_label[label]
            return distance_pdf(grid, _unit_params(k, dbar, size))

        k_csv = write_csv(
            out / f"rescaled_k{k}.csv",
            f"mc-rescaled-k{k}",
            _kde_columns(rescaled[k], float(bw_rescaled), theory=theory),
        )
        outputs.append(k_csv)
        outputs.append(
            _write_svg(
                out / f"rescaled_k{k}.svg",
                line_plot(
                    k_csv.read_text(encoding="utf-8"),
                    "x",
                    "density",
                    group="series",
                    dashed=tuple(f"L={size} theory" for size in l_list),
                    title=f"Rescaled distance r_{k} / C vs unit-catalog law",
                    x_label="r / C",
                ),
            )
        )
        p_bits = ", ".join(
            f"L={ks_cols['L'][i]}: {ks_cols['p_value'][i]:.3f}"
            for i in range(len(ks_cols["k"]))
            if ks_cols["k"][i] == k
        )
        summary.append(f"KS p-values at k={k}: {p_bits}")

    return _finish("mc-distances", parameters, outputs, out / "manifest.json", summary)


# ---------------------------------------------------------------------------
# rescaled fluctuation densities


def run_rescaled_density(
    out,
    catalog,
    k_max=8,
    bandwidth=0.3,
    n_analogs_dim=40,
    n_targets=400,
    exclusion_gap=36,
    seed=0,
) -> ExperimentResult:
    """Pool rescaled analog-distance fluctuations over targets, rank by rank.

    Each target's distances are centered and scaled with its own fitted
    dimension and prefactor, u_k = d sqrt(k) (r_k / (C k^(1/d)) - 1); the
    pooled u_k densities are then compared with the closed-form fluctuation
    law evaluated at the mean fitted dimension.
    """
    out = _ensure_dir(out)
    cat = _with_times(load_catalog(catalog))
    k_max = int(k_max)
    n_analogs_dim = int(n_analogs_dim)
    n_targets = int(n_targets)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if n_analogs_dim < max(3, k_max):
        raise ValueError("n_analogs_dim must be >= max(3, k_max)")
    if n_targets < 2:
        raise ValueError("n_targets must be >= 2")
    parameters = {
        "out": str(out),
        "catalog": str(catalog),
        "k_max": k_max,
        "bandwidth": float(bandwidth),
        "n_analogs_dim": n_analogs_dim,
        "n_targets": n_targets,
        "exclusion_gap": int(exclusion_gap),
        "seed": int(seed),
    }

    index = NeighborIndex(cat)
    rng = np.random.default_rng(int(seed))
    picks = np.sort(rng.choice(len(cat), size=min(n_targets, len(cat)), replace=False))
    dims = np.empty(len(picks))
    prefs = np.empty(len(picks))
    u_rows = np.empty((len(picks), k_max))
    for j, row in enumerate(picks):
        analogs = _query_analogs(index, cat, int(row), n_analogs_dim, int(exclusion_gap))
        est = estimate_local_dimension(analogs)
        fit = fit_prefactor(analogs, est.dim, len(cat))
        dims[j] = est.dim
        prefs[j] = fit.prefactor
        u_rows[j] = rescale_distances(analogs, est.dim, fit.prefactor)[:k_max]
    dbar = float(dims.mean())

    targets_csv = write_csv(
        out / "targets.csv",
        "rescaled-targets",
        {
            "target": picks,
            "time": cat.times[picks],
            "dim": dims,
            "prefactor": prefs,
        },
    )

    bw = float(bandwidth)
    lo = min(-4.5, float(u_rows.min()) - 4.0 * bw)
    hi = max(4.5, float(u_rows.max()) + 4.0 * bw)
    grid = np.linspace(lo, hi, _DENSITY_GRID)
    series, k_col, u_col, y_col = [], [], [], []
    for k in range(1, k_max + 1):
        kde = gaussian_kde(u_rows[:, k - 1], bw, grid)
        series.extend([f"k={k}"] * len(grid))
        k_col.extend([k] * len(grid))
        u_col.extend(grid.tolist())
        y_col.extend(kde.values.tolist())
        series.extend([f"k={k} theory"] * len(grid))
        k_col.extend([k] * len(grid))
        u_col.extend(grid.tolist())
        y_col.extend(np.asarray(rescaled_pdf(grid, k, dbar)).tolist())
    curves_csv = write_csv(
        out / "curves.csv",
        "rescaled-densities",
        {"series": series, "k": k_col, "u": u_col, "density": y_col},
    )
    svg = _write_svg(
        out / "rescaled.svg",
        line_plot(
            curves_csv.read_text(encoding="utf-8"),
            "u",
            "density",
            group="series",
            dashed=tuple(f"k={k} theory" for k in range(1, k_max + 1)),
            title=f"Rescaled fluctuations, mean dim {dbar:.2f}",
            x_label="u",
        ),
    )
    summary = [
        f"{len(picks)} targets: mean dim {dbar:.3f} (std {dims.std(ddof=1):.3f}), "
        f"ranks 1..{k_max} pooled",
    ]
    return _finish(
        "rescaled-density",
        parameters,
        [targets_csv, curves_csv, svg],
        out / "manifest.json",
        summary,
    )


# ---------------------------------------------------------------------------
# dimension-budget scan


def run_dmax_scan(
    out,
    catalog,
    epsilon,
    k_list=(1, 5, 25, 100),
    eof_counts=(1, 2, 3, 4, 5, 6, 8, 10, 13, 16, 20, 25, 32, 40, 50),
    l_eff=None,
    rho_bar=0.55,
    n_analogs=40,
    n_targets=200,
    seed=0,
    rmsd_pairs=50_000,
) -> ExperimentResult:
    """Scan EOF truncations against the analog-quality criterion per rank."""
    out = _ensure_dir(out)
    cat = load_catalog(catalog)
    data = cat.states
    k_list = tuple(sorted(int(k) for k in k_list))
    limit = min(data.shape[0], data.shape[1])
    eof_counts = tuple(sorted({int(c) for c in eof_counts if 1 <= int(c) <= limit}))
    if not eof_counts:
        raise ValueError("no usable eof_counts for this catalog")
    parameters = {
        "out": str(out),
        "catalog": str(catalog),
        "epsilon": float(epsilon),
        "k_list": list(k_list),
        "eof_counts": list(eof_counts),
        "l_eff": None if l_eff is None else int(l_eff),
        "rho_bar": float(rho_bar),
        "n_analogs": int(n_analogs),
        "n_targets": int(n_targets),
        "seed": int(seed),
        "rmsd_pairs": int(rmsd_pairs),
    }

    scan_cols = {
        "series": [],
        "k": [],
        "n_eof": [],
        "mean_dim": [],
        "ratio": [],
        "passed": [],
        "dmax_theory": [],
    }
    boundary_cols = {"series": [], "k": [], "dmax": []}
    summary = []
    for k in k_list:
        criterion = ReductionCriterion(
            epsilon=float(epsilon), rank=k, l_eff=l_eff, rho_bar=float(rho_bar)
        )
        rows = criterion_scan(
            data,
            criterion,
            eof_counts,
            n_analogs=int(n_analogs),
            n_targets=int(n_targets),
            seed=int(seed),
            rmsd_pairs=int(rmsd_pairs),
        )
        label = f"k={k}"
        for row in rows:
            scan_cols["series"].append(label)
            scan_cols["k"].append(k)
            scan_cols["n_eof"].append(row.n_eof)
            scan_cols["mean_dim"].append(row.mean_dim)
            scan_cols["ratio"].append(row.ratio)
            scan_cols["passed"].append(row.passed)
            scan_cols["dmax_theory"].append(row.dmax_theory)
        passing = [row.n_eof for row in rows if row.passed]
        empirical = float(max(passing)) if passing else math.nan
        boundary_cols["series"].extend(["empirical", "theory"])
        boundary_cols["k"].extend([k, k])
        boundary_cols["dmax"].extend([empirical, rows[0].dmax_theory])
        shown = "none" if math.isnan(empirical) else f"{empirical:g}"
        summary.append(
            f"k={k}: largest passing truncation {shown}, theory bound {rows[0].dmax_theory:.2f}"
        )

    scan_csv = write_csv(out / "scan.csv", "dmax-scan", scan_cols)
    boundary_csv = write_csv(out / "boundary.csv", "dmax-boundary", boundary_cols)
    ratio_svg = _write_svg(
        out / "ratio.svg",
        line_plot(
            scan_csv.read_text(encoding="utf-8"),
            "n_eof",
            "ratio",
            group="series",
            title=f"Mean rank-k distance / RMSD (epsilon={float(epsilon):g})",
            x_label="EOF count",
        ),
    )
    boundary_svg = _write_svg(
        out / "boundary.svg",
        line_plot(
            boundary_csv.read_text(encoding="utf-8"),
            "k",
            "dmax",
            group="series",
            dashed=("theory",),
            log_x=True,
            title="Largest truncation passing the criterion",
            x_label="rank k",
            y_label="dimension budget",
        ),
    )
    return _finish(
        "dmax-scan",
        parameters,
        [scan_csv, boundary_csv, ratio_svg, boundary_svg],
        out / "manifest.json",
        summary,
    )


# ---------------------------------------------------------------------------
# clustering pipeline


def run_cluster(
    out,
    catalog,
    n_eof=50,
    candidates=(1, 2, 3, 4, 5, 6, 7, 8),
    seeds_per_candidate=5,
    covariance="full",
    standardize=False,
    seed=0,
) -> ExperimentResult:
    """EOF-reduce a catalog, select a mixture size by BIC, assign clusters."""
    out = _ensure_dir(out)
    cat = load_catalog(catalog)
    n_eof = int(n_eof)
    parameters = {
        "out": str(out),
        "catalog": str(catalog),
        "n_eof": n_eof,
        "candidates": [int(c) for c in candidates],
        "seeds_per_candidate": int(seeds_per_candidate),
        "covariance": str(covariance),
        "standardize": bool(standardize),
        "seed": int(seed),
    }

    basis = eof_fit(cat.states, n_eof)
    features = project(basis, cat.states)
    if standardize:
        spread = features.std(axis=0, ddof=1)
        spread = np.where(spread > 0.0, spread, 1.0)
        features = features / spread
    selection = select_n_clusters(
        features,
        [int(c) for c in candidates],
        seeds_per_candidate=int(seeds_per_candidate),
        base_seed=int(seed),
        covariance=str(covariance),
    )
    labels = assign_spatial_clusters(selection.best_model, features)
    counts = np.bincount(labels, minlength=selection.best_n)

    bic_csv = write_csv(
        out / "bic.csv",
        "cluster-bic",
        {
            "n_components": [n for n, _ in selection.bic_curve],
            "bic": [b for _, b in selection.bic_curve],
        },
    )
    times = cat.times if cat.times is not None else np.arange(len(cat), dtype=np.int64)
    assign_csv = write_csv(
        out / "assignments.csv",
        "cluster-assignments",
        {"index": np.arange(len(cat)), "time": times, "cluster": labels},
    )
    eof_csv = write_csv(
        out / "eof.csv",
        "cluster-eof-spectrum",
        {
            "component": np.arange(1, basis.n_components + 1),
            "explained_variance": basis.explained_variance,
        },
    )
    model_path = out / "model.json"
    model_path.write_text(selection.best_model.to_json() + "\n", encoding="utf-8")
    bic_svg = _write_svg(
        out / "bic.svg",
        line_plot(
            bic_csv.read_text(encoding="utf-8"),
            "n_components",
            "bic",
            title="BIC across mixture sizes",
            x_label="components",
        ),
    )
    summary = [
        f"selected {selection.best_n} components (BIC curve over "
        f"{[n for n, _ in selection.bic_curve]})",
        "cluster sizes: " + " ".join(str(int(c)) for c in counts),
    ]
    return _finish(
        "cluster",
        parameters,
        [bic_csv, assign_csv, eof_csv, model_path, bic_svg],
        out / "manifest.json",
        summary,
    )


# ---------------------------------------------------------------------------
# dimension time series


def run_dim_stats(
    out,
    catalog,
    n_analogs=40,
    exclusion_gap=36,
    n_targets=2000,
    steps_per_day=24,
    smooth_window_days=80,
    hist_bins=40,
) -> ExperimentResult:
    """Local-dimension series over a catalog with daily/weekly statistics.

    Targets are evenly strided catalog rows; temporal exclusion keeps the
    trajectory's own immediate past and future out of each analog set. The
    series is aggregated into daily means (smoothed with a Gaussian window
    whose sigma is a quarter of smooth_window_days), weekly 10-90 %
    quantile spreads, and a histogram.
    """
    out = _ensure_dir(out)
    cat = _with_times(load_catalog(catalog))
    n_analogs = int(n_analogs)
    steps_per_day = int(steps_per_day)
    if steps_per_day < 1:
        raise ValueError("steps_per_day must be >= 1")
    parameters = {
        "out": str(out),
        "catalog": str(catalog),
        "n_analogs": n_analogs,
        "exclusion_gap": int(exclusion_gap),
        "n_targets": int(n_targets),
        "steps_per_day": steps_per_day,
        "smooth_window_days": float(smooth_window_days),
        "hist_bins": int(hist_bins),
    }

    index = NeighborIndex(cat)
    picks = np.unique(np.linspace(0, len(cat) - 1, min(int(n_targets), len(cat))).round().astype(np.int64))
    dims = np.empty(len(picks))
    for j, row in enumerate(picks):
        analogs = _query_analogs(index, cat, int(row), n_analogs, int(exclusion_gap))
        dims[j] = estimate_local_dimension(analogs).dim
    tvals = cat.times[picks]

    dims_csv = write_csv(
        out / "dims.csv", "dim-series", {"target": picks, "time": tvals, "dim": dims}
    )

    density, edges = np.histogram(dims, bins=int(hist_bins), density=True)
    hist_csv = write_csv(
        out / "hist.csv",
        "dim-histogram",
        {"bin_center": 0.5 * (edges[:-1] + edges[1:]), "density": density},
    )

    days = tvals // steps_per_day
    uniq_days, inverse = np.unique(days, return_inverse=True)
    sums = np.bincount(inverse, weights=dims)
    counts = np.bincount(inverse)
    daily_mean = sums / counts
    smoothed = gaussian_smooth(daily_mean, sigma=float(smooth_window_days) / 4.0)
    daily_csv = write_csv(
        out / "daily.csv",
        "dim-daily",
        {"day": uniq_days, "mean_dim": daily_mean, "smoothed": smoothed, "n_samples": counts},
    )

    weeks = tvals // (7 * steps_per_day)
    uniq_weeks, w_inverse = np.unique(weeks, return_inverse=True)
    q10 = np.empty(len(uniq_weeks))
    q90 = np.empty(len(uniq_weeks))
    for wi in range(len(uniq_weeks)):
        block = dims[w_inverse == wi]
        q10[wi] = np.quantile(block, 0.10)
        q90[wi] = np.quantile(block, 0.90)
    weekly_csv = write_csv(
        out / "weekly.csv",
        "dim-weekly-spread",
        {"week": uniq_weeks, "q10": q10, "q90": q90, "spread": q90 - q10},
    )

    hist_svg = _write_svg(
        out / "hist.svg",
        line_plot(
            hist_csv.read_text(encoding="utf-8"),
            "bin_center",
            "density",
            title="Local dimension histogram",
            x_label="dim",
        ),
    )
    daily_svg = _write_svg(
        out / "daily.svg",
        line_plot(
            daily_csv.read_text(encoding="utf-8"),
            "day",
            ("mean_dim", "smoothed"),
            title="Daily mean local dimension",
            x_label="day",
            y_label="dim",
        ),
    )
    weekly_svg = _write_svg(
        out / "weekly.svg",
        line_plot(
            weekly_csv.read_text(encoding="utf-8"),
            "week",
            "spread",
            title="Weekly 10-90 % dimension spread",
            x_label="week",
        ),
    )
    summary = [
        f"{len(picks)} targets: dim mean {dims.mean():.3f} std {dims.std(ddof=1):.3f} "
        f"min {dims.min():.3f} max {dims.max():.3f}",
        f"{len(uniq_days)} daily bins, {len(uniq_weeks)} weekly bins",
    ]
    return _finish(
        "dim-stats",
        parameters,
        [dims_csv, hist_csv, daily_csv, weekly_csv, hist_svg, daily_svg, weekly_svg],
        out / "manifest.json",
        summary,
    )


# ---------------------------------------------------------------------------
# re-running from manifests

RUNNERS = {
    "gen-l63": (run_gen_l63, "file"),
    "gen-surrogate": (run_gen_surrogate, "file"),
    "theory-curves": (run_theory_curves, "dir"),
    "fit-target": (run_fit_target, "dir"),
    "mc-distances": (run_mc_distances, "dir"),
    "rescaled-density": (run_rescaled_density, "dir"),
    "dmax-scan": (run_dmax_scan, "dir"),
    "cluster": (run_cluster, "dir"),
    "dim-stats": (run_dim_stats, "dir"),
}


def run_rerun(manifest_path, out=None) -> tuple[ExperimentResult, dict[str, bool]]:
    """Re-run the experiment a manifest records and re-verify output hashes.

    Without `out`, artifacts are regenerated in place (next to the
    manifest). Returns the fresh result plus, per recorded output, whether
    the regenerated file matches the recorded SHA-256.
    """
    manifest_path = Path(manifest_path)
    recorded = load_manifest(manifest_path)
    if recorded.command not in RUNNERS:
        raise ValueError(f"manifest names unknown command {recorded.command!r}")
    func, kind = RUNNERS[recorded.command]
    params = dict(recorded.parameters)
    recorded_out = params.pop("out", None)
    if out is None:
        if kind == "dir":
            out = manifest_path.parent
        else:
            if recorded_out is None:
                raise ValueError("manifest lacks an output path")
            out = manifest_path.parent / Path(recorded_out).name
    result = func(out, **params)
    status = verify_outputs(recorded, Path(result.manifest_path).parent)
    return result, status
