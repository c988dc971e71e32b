"""Lorenz-63 system and a fixed-step RK4 integrator.

The three-variable convective model is used as a reference chaotic system
with a well known attractor dimension slightly above 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError

__all__ = [
    "L63Params",
    "L63State",
    "Trajectory",
    "l63_derivative",
    "rk4_step",
    "generate_trajectory",
    "DEFAULT_DT",
    "DEFAULT_BURN_IN",
    "DEFAULT_INITIAL_STATE",
]

DEFAULT_DT = 0.01
DEFAULT_BURN_IN = 10_000
DEFAULT_INITIAL_STATE = (1.0, 1.0, 1.0)

# States beyond this amplitude are treated as diverged; the attractor itself
# stays within a box of roughly |x1|,|x2| < 30, 0 < x3 < 50.
_FINITE_BOUND = 1.0e6


@dataclass(frozen=True)
class L63Params:
    """Classical parameter set of the convective model."""

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0


@dataclass(frozen=True)
class L63State:
    x1: float
    x2: float
    x3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=np.float64)


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory: ``states[i]`` is the state after ``burn_in + i*stride``
    integration steps of size ``dt``."""

    states: np.ndarray  # (n, 3) float64
    dt: float
    stride: int

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[1] != 3:
            raise ValueError("states must be an (n, 3) array")
        if len(self.states) == 0:
            raise ValueError("trajectory must contain at least one state")

    def __len__(self) -> int:
        return len(self.states)

    def state(self, i: int) -> L63State:
        x1, x2, x3 = self.states[i]
        return L63State(float(x1), float(x2), float(x3))


def l63_derivative(s: L63State, p: L63Params = L63Params()) -> L63State:
    """Right-hand side of the Lorenz-63 equations."""
    return L63State(
        p.sigma * (s.x2 - s.x1),
        s.x1 * (p.rho - s.x3) - s.x2,
        s.x1 * s.x2 - p.beta * s.x3,
    )


def rk4_step(s: L63State, p: L63Params = L63Params(), dt: float = DEFAULT_DT) -> L63State:
    """One classical Runge-Kutta step of size dt."""
    x1, x2, x3 = _rk4(s.x1, s.x2, s.x3, p.sigma, p.rho, p.beta, dt)
    return L63State(x1, x2, x3)


def _rk4(x1, x2, x3, sigma, rho, beta, dt):
    # Inlined stages; this function is the hot loop of generate_trajectory.
    a1 = sigma * (x2 - x1)
    a2 = x1 * (rho - x3) - x2
    a3 = x1 * x2 - beta * x3

    h = 0.5 * dt
    y1 = x1 + h * a1
    y2 = x2 + h * a2
    y3 = x3 + h * a3
    b1 = sigma * (y2 - y1)
    b2 = y1 * (rho - y3) - y2
    b3 = y1 * y2 - beta * y3

    y1 = x1 + h * b1
    y2 = x2 + h * b2
    y3 = x3 + h * b3
    c1 = sigma * (y2 - y1)
    c2 = y1 * (rho - y3) - y2
    c3 = y1 * y2 - beta * y3

    y1 = x1 + dt * c1
    y2 = x2 + dt * c2
    y3 = x3 + dt * c3
    d1 = sigma * (y2 - y1)
    d2 = y1 * (rho - y3) - y2
    d3 = y1 * y2 - beta * y3

    w = dt / 6.0
    return (
        x1 + w * (a1 + 2.0 * (b1 + c1) + d1),
        x2 + w * (a2 + 2.0 * (b2 + c2) + d2),
        x3 + w * (a3 + 2.0 * (b3 + c3) + d3),
    )


def generate_trajectory(
    s0: L63State | tuple[float, float, float] = DEFAULT_INITIAL_STATE,
    n_steps: int = 1000,
    dt: float = DEFAULT_DT,
    burn_in: int = DEFAULT_BURN_IN,
    stride: int = 1,
    params: L63Params = L63Params(),
    seed: int | None = None,
    jitter: float = 1e-3,
) -> Trajectory:
    """Integrate from s0 and return n_steps samples taken every ``stride`` steps.

    The first ``burn_in`` steps are discarded so that samples start on the
    attractor. The ODE itself is deterministic; ``seed`` only controls an
    optional Gaussian jitter of amplitude ``jitter`` applied to the initial
    condition, which yields independent trajectories through chaotic
    divergence during burn-in.

    Raises NonFiniteError as soon as any coordinate exceeds 1e6 in magnitude
    or becomes non-finite, which signals an unstable dt.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if dt <= 0.0:
        raise ValueError("dt must be positive")

    if isinstance(s0, L63State):
        x1, x2, x3 = s0.x1, s0.x2, s0.x3
    else:
        x1, x2, x3 = map(float, s0)
    if seed is not None:
        rng = np.random.default_rng(seed)
        dx = rng.normal(0.0, jitter, size=3)
        x1 += dx[0]
        x2 += dx[1]
        x3 += dx[2]

    sigma, rho, beta = params.sigma, params.rho, params.beta
    bound = _FINITE_BOUND
    out = np.empty((n_steps, 3), dtype=np.float64)

    step = _rk4
    for i in range(burn_in):
        x1, x2, x3 = step(x1, x2, x3, sigma, rho, beta, dt)
        if not (-bound < x1 < bound and -bound < x2 < bound and -bound < x3 < bound):
            raise NonFiniteError(
                f"state diverged during burn-in at step {i + 1} (dt={dt})"
            )

    out[0, 0] = x1
    out[0, 1] = x2
    out[0, 2] = x3
    for i in range(1, n_steps):
        for _ in range(stride):
            x1, x2, x3 = step(x1, x2, x3, sigma, rho, beta, dt)
        if not (-bound < x1 < bound and -bound < x2 < bound and -bound < x3 < bound):
            raise NonFiniteError(
                f"state diverged at sample {i} (dt={dt}, stride={stride})"
            )
        out[i, 0] = x1
        out[i, 1] = x2
        out[i, 2] = x3

    return Trajectory(states=out, dt=dt, stride=stride)
