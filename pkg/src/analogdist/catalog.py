"""Catalogs of states: containers, subsampling, temporal exclusion, and file IO.

A catalog is an (L, D) matrix of float64 states with optional integer
timestamps (hours or step counts). Files use the ``.anacat`` container:
a single JSON header line followed by the row-major little-endian float64
payload and, if present, little-endian int64 times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, TooLargeError

__all__ = [
    "Catalog",
    "ExclusionPolicy",
    "subsample_without_replacement",
    "apply_exclusion",
    "save_catalog",
    "load_catalog",
    "load_catalog_csv",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1

# Header lines beyond this size indicate a corrupt file, not a real header.
_MAX_HEADER_BYTES = 1 << 20


@dataclass(frozen=True)
class Catalog:
    """Immutable collection of candidate states.

    states: (L, D) float64, one state per row.
    times:  optional (L,) int64, strictly increasing.
    name, units: free-form labels carried through file round-trips.
    """

    states: np.ndarray
    times: np.ndarray | None = None
    name: str = ""
    units: str = ""

    def __post_init__(self):
        states = np.ascontiguousarray(np.asarray(self.states, dtype=np.float64))
        if states.ndim != 2:
            raise ValueError("states must be a 2-d array")
        if states.shape[0] < 1 or states.shape[1] < 1:
            raise ValueError("catalog needs at least one row and one column")
        object.__setattr__(self, "states", states)
        if self.times is not None:
            times = np.ascontiguousarray(np.asarray(self.times, dtype=np.int64))
            if times.shape != (states.shape[0],):
                raise ValueError("times must have one entry per state")
            if len(times) > 1 and not np.all(np.diff(times) > 0):
                raise ValueError("times must be strictly increasing")
            object.__setattr__(self, "times", times)

    @property
    def length(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class ExclusionPolicy:
    """Rules removing candidates too close in time to the target or to each other.

    min_target_gap: candidates with |time - target_time| < gap are discarded
        (0 disables the rule). The default of 36 hours removes same-weather
        neighbours for hourly catalogs.
    dedup_neighbor_runs: within the candidate set, maximal runs of
        time-adjacent candidates (consecutive timestamps, gap of one unit)
        are collapsed to a single member chosen uniformly at random.
    rng_seed: seed for that random choice; a fixed seed makes the policy
        deterministic for a given candidate set.
    """

    min_target_gap: int = 36
    dedup_neighbor_runs: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.min_target_gap < 0:
            raise ValueError("min_target_gap must be >= 0")


def subsample_without_replacement(c: Catalog, n_rows: int, seed: int) -> Catalog:
    """Draw n_rows distinct rows, keeping their original order.

    Deterministic for a given seed. Raises TooLargeError when the request
    exceeds the source length.
    """
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    if n_rows > c.length:
        raise TooLargeError(
            f"requested {n_rows} rows from a catalog of {c.length}"
        )
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(c.length, size=n_rows, replace=False))
    times = c.times[idx] if c.times is not None else None
    return Catalog(states=c.states[idx], times=times, name=c.name, units=c.units)


def apply_exclusion(
    indices: np.ndarray,
    distances: np.ndarray,
    target_time: int | None,
    times: np.ndarray | None,
    policy: ExclusionPolicy,
) -> tuple[np.ndarray, np.ndarray]:
    """Filter a candidate list (catalog indices plus distances) by a policy.

    Returns the retained (indices, distances) sorted by ascending distance,
    ties broken by ascending index. Candidates closer than min_target_gap to
    target_time are dropped; if dedup_neighbor_runs is set, each maximal run
    of time-adjacent candidates keeps exactly one random member.
    """
    indices = np.asarray(indices, dtype=np.int64)
    distances = np.asarray(distances, dtype=np.float64)
    if indices.shape != distances.shape or indices.ndim != 1:
        raise ValueError("indices and distances must be 1-d arrays of equal length")

    needs_times = policy.min_target_gap > 0 or policy.dedup_neighbor_runs
    if needs_times and times is None:
        raise ValueError("exclusion policy needs catalog times")
    if policy.min_target_gap > 0 and target_time is None:
        raise ValueError("min_target_gap needs a target time")

    keep = np.ones(len(indices), dtype=bool)
    if policy.min_target_gap > 0 and len(indices):
        cand_times = times[indices]
        keep &= np.abs(cand_times - int(target_time)) >= policy.min_target_gap

    indices = indices[keep]
    distances = distances[keep]

    if policy.dedup_neighbor_runs and len(indices) > 1:
        cand_times = times[indices]
        order = np.argsort(cand_times, kind="stable")
        sorted_times = cand_times[order]
        # Runs are maximal chains with consecutive timestamps.
        run_start = np.flatnonzero(np.diff(sorted_times) != 1)
        starts = np.concatenate(([0], run_start + 1))
        ends = np.concatenate((run_start + 1, [len(sorted_times)]))
        rng = np.random.default_rng(policy.rng_seed)
        chosen = []
        for a, b in zip(starts, ends):
            if b - a == 1:
                chosen.append(order[a])
            else:
                chosen.append(order[a + rng.integers(b - a)])
        sel = np.array(sorted(chosen), dtype=np.intp)
        indices = indices[sel]
        distances = distances[sel]

    order = np.lexsort((indices, distances))
    return indices[order], distances[order]


def _header_dict(c: Catalog) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "L": c.length,
        "D": c.dim,
        "dtype": "f64",
        "has_times": c.times is not None,
        "metadata": {"name": c.name, "units": c.units},
    }


def save_catalog(c: Catalog, path) -> None:
    """Write the binary container; round-trips bitwise through load_catalog."""
    header = json.dumps(_header_dict(c), sort_keys=True) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(c.states, dtype="<f8").tobytes())
        if c.times is not None:
            fh.write(np.ascontiguousarray(c.times, dtype="<i8").tobytes())


def load_catalog(path) -> Catalog:
    """Read a catalog container, validating the header and payload length."""
    with open(path, "rb") as fh:
        raw = fh.read()

    newline = raw.find(b"\n")
    if newline < 0 or newline > _MAX_HEADER_BYTES:
        raise FormatError("missing header line", 0)
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("header is not valid JSON", 0) from None
    if not isinstance(header, dict):
        raise FormatError("header must be a JSON object", 0)

    offset = newline + 1
    try:
        version = int(header["schema_version"])
        length = int(header["L"])
        dim = int(header["D"])
        dtype = header["dtype"]
        has_times = bool(header["has_times"])
        metadata = header.get("metadata", {}) or {}
    except (KeyError, TypeError, ValueError):
        raise FormatError("header is missing required fields", 0) from None
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {version}", 0)
    if dtype != "f64":
        raise FormatError(f"unsupported dtype {dtype!r}", 0)
    if length < 1 or dim < 1:
        raise FormatError(f"invalid shape L={length}, D={dim}", 0)

    n_state_bytes = length * dim * 8
    n_time_bytes = length * 8 if has_times else 0
    expected = offset + n_state_bytes + n_time_bytes
    if len(raw) < expected:
        raise FormatError(
            f"payload truncated: expected {expected} bytes, file has {len(raw)}",
            len(raw),
        )
    if len(raw) > expected:
        raise FormatError("trailing bytes after payload", expected)

    states = np.frombuffer(raw, dtype="<f8", count=length * dim, offset=offset)
    states = states.reshape(length, dim).copy()
    times = None
    if has_times:
        times = np.frombuffer(
            raw, dtype="<i8", count=length, offset=offset + n_state_bytes
        ).copy()

    try:
        return Catalog(
            states=states,
            times=times,
            name=str(metadata.get("name", "")),
            units=str(metadata.get("units", "")),
        )
    except ValueError as exc:
        raise FormatError(f"invalid payload: {exc}", offset) from None


def load_catalog_csv(path, has_times: bool = False, name: str = "", units: str = "") -> Catalog:
    """Import a plain CSV file, one state per row.

    With has_times the first column is read as integer timestamps.
    """
    data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    if data.size == 0:
        raise FormatError("empty CSV file", 0)
    if has_times:
        if data.shape[1] < 2:
            raise FormatError("CSV with times needs at least two columns", 0)
        times = data[:, 0]
        if not np.allclose(times, np.round(times)):
            raise FormatError("time column must hold integers", 0)
        return Catalog(
            states=data[:, 1:],
            times=times.astype(np.int64),
            name=name,
            units=units,
        )
    return Catalog(states=data, times=None, name=name, units=units)
