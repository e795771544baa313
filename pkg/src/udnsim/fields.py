"""Grid, terminal conditions, initial density and solution containers.

The state space is the normalized queue y = q / capacity on [0, 1]; the time
axis covers one scheduling period [0, horizon].  All fields are stored
row-major as (n_t, n_q) arrays on a uniform node grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvariantError

BOUNDARY_KINDS = ("exponential", "uniform", "linear")

MASS_TOL = 1e-3
DENSITY_FLOOR = -1e-9


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid over [0, horizon] x [0, 1]."""

    n_t: int
    n_q: int
    horizon_s: float = 1.0

    def __post_init__(self):
        if self.n_t < 2 or self.n_q < 2:
            raise ConfigError("grid needs at least 2 nodes per axis")
        if self.horizon_s <= 0:
            raise ConfigError("horizon_s must be positive")

    @property
    def dt(self) -> float:
        return self.horizon_s / (self.n_t - 1)

    @property
    def dq(self) -> float:
        return 1.0 / (self.n_q - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon_s, self.n_t)

    @property
    def queues(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_q)

    def cell_widths(self) -> np.ndarray:
        """Finite-volume cell widths (half cells at the walls); they sum to 1
        and make the trapezoid rule the exact conserved mass."""
        w = np.full(self.n_q, self.dq)
        w[0] = w[-1] = 0.5 * self.dq
        return w


def terminal_value(kind: str, q_norm) -> np.ndarray:
    """Terminal value of backlog y at the end of the period.

    exponential: -4 exp(y);  uniform: -4;  linear: -4 (e - 1) y - 4.
    All three agree at y=0 and penalize leftover backlog increasingly hard.
    """
    y = np.asarray(q_norm, dtype=float)
    if kind == "exponential":
        return -4.0 * np.exp(y)
    if kind == "uniform":
        return np.full_like(y, -4.0)
    if kind == "linear":
        return -4.0 * (math.e - 1.0) * y - 4.0
    raise ConfigError(f"unknown boundary kind {kind!r}; choose from {BOUNDARY_KINDS}")


def initial_density(grid: GridSpec, mean: float = 0.5, variance: float = 0.1) -> np.ndarray:
    """Truncated Gaussian backlog density on the grid nodes, renormalized so
    the trapezoid mass is exactly 1."""
    if variance <= 0:
        raise ConfigError("initial density variance must be positive")
    y = grid.queues
    rho = np.exp(-0.5 * (y - mean) ** 2 / variance)
    mass = np.trapezoid(rho, dx=grid.dq)
    if mass <= 0:
        raise ConfigError("initial density has no mass on [0, 1]")
    return rho / mass


def density_mass(grid: GridSpec, rho: np.ndarray) -> np.ndarray:
    """Trapezoid mass of one slice or of every row of a (n_t, n_q) field."""
    return np.trapezoid(rho, dx=grid.dq, axis=-1)


def density_from_samples(grid: GridSpec, q_norm_samples) -> np.ndarray:
    """Empirical density of finite-population backlog samples on the grid
    nodes (diagnostic companion to the mean-field density)."""
    samples = np.clip(np.asarray(q_norm_samples, dtype=float), 0.0, 1.0)
    edges = np.concatenate(([0.0], grid.queues[:-1] + 0.5 * grid.dq, [1.0]))
    counts, _ = np.histogram(samples, bins=edges)
    rho = counts / (samples.size * grid.cell_widths())
    # renormalize so the trapezoid mass is exactly 1 despite half-width walls
    mass = np.trapezoid(rho, dx=grid.dq)
    return rho / mass if mass > 0 else rho


@dataclass
class ValueField:
    grid: GridSpec
    values: np.ndarray  # (n_t, n_q)

    def validate(self):
        if self.values.shape != (self.grid.n_t, self.grid.n_q):
            raise InvariantError("value field shape does not match grid")
        if not np.isfinite(self.values).all():
            raise InvariantError("value field has non-finite entries")


@dataclass
class DensityField:
    grid: GridSpec
    values: np.ndarray  # (n_t, n_q)

    def validate(self):
        if self.values.shape != (self.grid.n_t, self.grid.n_q):
            raise InvariantError("density field shape does not match grid")
        if self.values.min() < DENSITY_FLOOR:
            raise InvariantError(f"density has negative entries below {DENSITY_FLOOR}")
        mass = density_mass(self.grid, self.values)
        err = np.abs(mass - 1.0).max()
        if err > MASS_TOL:
            raise InvariantError(f"density mass drifts by {err:.3e} (> {MASS_TOL})")


@dataclass
class PowerPolicy:
    grid: GridSpec
    values: np.ndarray  # (n_t, n_q), Watts
    max_power_w: float

    def validate(self):
        if self.values.shape != (self.grid.n_t, self.grid.n_q):
            raise InvariantError("policy field shape does not match grid")
        if self.values.min() < 0.0 or self.values.max() > self.max_power_w + 1e-12:
            raise InvariantError("policy leaves the [0, max_power] box")

    def __call__(self, t, q_norm):
        """Bilinear policy lookup; t scalar or array, q_norm array-like."""
        return bilinear(self.grid, self.values, t, q_norm)


def bilinear(grid: GridSpec, values: np.ndarray, t, q_norm):
    """Bilinear interpolation of a (n_t, n_q) field, clamped to the domain."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, grid.horizon_s)
    y = np.clip(np.asarray(q_norm, dtype=float), 0.0, 1.0)
    ft = np.minimum(t / grid.dt, grid.n_t - 1 - 1e-12)
    fy = np.minimum(y / grid.dq, grid.n_q - 1 - 1e-12)
    it = ft.astype(int)
    iy = fy.astype(int)
    at = ft - it
    ay = fy - iy
    v00 = values[it, iy]
    v01 = values[it, iy + 1]
    v10 = values[it + 1, iy]
    v11 = values[it + 1, iy + 1]
    return (1 - at) * ((1 - ay) * v00 + ay * v01) + at * ((1 - ay) * v10 + ay * v11)


def interp_trajectory(grid: GridSpec, traj: np.ndarray, t):
    """Linear interpolation of a per-slice scalar trajectory (e.g. mean-field
    interference) at time t."""
    return np.interp(np.clip(t, 0.0, grid.horizon_s), grid.times, traj)


@dataclass
class MfgSolution:
    """Converged equilibrium bundle for one scheduling period."""

    grid: GridSpec
    value: np.ndarray         # (n_t, n_q)
    density: np.ndarray       # (n_t, n_q)
    policy: np.ndarray        # (n_t, n_q), Watts
    interference: np.ndarray  # (n_t,), normalized Watts
    iterations: int
    residuals: list = field(default_factory=list)
    eta: float = 0.0
    noise_norm: float = 0.0
    mean_sq_gain: float = 1.0
    boundary: str = "exponential"
    max_power_w: float = 1.0

    @property
    def residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")

    def power_policy(self) -> PowerPolicy:
        return PowerPolicy(self.grid, self.policy, self.max_power_w)

    def validate(self):
        ValueField(self.grid, self.value).validate()
        DensityField(self.grid, self.density).validate()
        PowerPolicy(self.grid, self.policy, self.max_power_w).validate()
        if self.interference.shape != (self.grid.n_t,):
            raise InvariantError("interference trajectory length does not match grid")
        if self.interference.min() < 0:
            raise InvariantError("interference trajectory has negative entries")
