"""Coupled backward value sweep, forward density transport and the
interference fixed point.

The backward sweep is an explicit monotone upwind scheme: the queue drift
d(t, y, p) = (arrivals - rate(p)) / capacity is strictly decreasing in p, so
the power range splits at the balance power (rate = arrivals) into a fill
branch (drift >= 0, upwinded on the forward difference) and a drain branch
(drift <= 0, upwinded on the backward difference); each branch maximum is the
pointwise power optimum on its interval and the larger branch Hamiltonian
wins.  At y=0 the drain branch is excluded (an empty queue has nothing to
send, so utility can only be earned on arrivals) and at y=1 the fill drift is
clamped to zero: backlog cannot leave [0, capacity].

The forward sweep is a conservative finite-volume upwind transport on the
same grid (half cells at the walls, zero-flux boundaries), sub-stepped
internally where needed so density stays nonnegative; total mass is conserved
to machine precision by construction.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import CflError, ConfigError, ConvergenceError, SchemeError
from .fields import (
    DENSITY_FLOOR,
    MASS_TOL,
    GridSpec,
    MfgSolution,
    density_mass,
    initial_density,
    terminal_value,
)
from .phy import LN2, PhyParams, QueueParams
from .power_opt import maximize_rate_value

log = logging.getLogger(__name__)

FP_TOL = 1e-4
FP_MAX_ITERS = 200
FP_DAMPING = 0.5
EXISTENCE_TOL = 1e-12


def _rate_coeffs(phy: PhyParams, queue: QueueParams):
    """(arrival speed, rate speed per nat) in normalized-queue units, 1/s."""
    abar = queue.arrival_rate_bps / queue.capacity_bits
    rcoef = phy.bandwidth_hz / (LN2 * queue.capacity_bits)
    return abar, rcoef


def _check_cfl(grid: GridSpec, beta_max: float, phy: PhyParams, queue: QueueParams):
    """Worst-case advection speed over the whole power box must fit the grid."""
    abar, rcoef = _rate_coeffs(phy, queue)
    speed = max(abar, rcoef * np.log1p(beta_max * phy.max_power_w) - abar)
    if speed * grid.dt > grid.dq * (1.0 + 1e-12):
        raise CflError(speed, grid.dt, grid.dq)
    return speed


def _beta_traj(interference, noise_norm, mean_sq_gain):
    interference = np.asarray(interference, dtype=float)
    if noise_norm <= 0:
        raise ConfigError("noise_norm must be positive")
    if interference.min() < 0:
        raise ConfigError("interference trajectory must be nonnegative")
    return mean_sq_gain / (interference + noise_norm)


def hjb_backward(grid: GridSpec, terminal, interference, phy: PhyParams,
                 queue: QueueParams, noise_norm: float, mean_sq_gain: float = 1.0):
    """Backward sweep; returns (value, policy) as (n_t, n_q) arrays.

    terminal: value at the period end, shape (n_q,).
    interference: per-slice mean-field interference, shape (n_t,).
    """
    terminal = np.asarray(terminal, dtype=float)
    if terminal.shape != (grid.n_q,):
        raise ConfigError("terminal slice length does not match grid")
    beta = _beta_traj(interference, noise_norm, mean_sq_gain)
    if beta.shape != (grid.n_t,):
        raise ConfigError("interference trajectory length does not match grid")
    _check_cfl(grid, float(beta.max()), phy, queue)

    abar, rcoef = _rate_coeffs(phy, queue)
    n_q, dq, dt = grid.n_q, grid.dq, grid.dt
    value = np.empty((grid.n_t, n_q))
    policy = np.empty((grid.n_t, n_q))
    value[-1] = terminal

    def step(v_next, beta_i):
        # one-sided differences of the known (later) slice
        dplus = np.zeros(n_q)
        dminus = np.zeros(n_q)
        dplus[:-1] = (v_next[1:] - v_next[:-1]) / dq
        dminus[1:] = (v_next[1:] - v_next[:-1]) / dq

        # balance power: rate equals arrivals, the drift sign switch
        if beta_i > 0:
            p_bal = min(np.expm1(abar / rcoef) / beta_i, phy.max_power_w)
        else:
            p_bal = phy.max_power_w

        # fill branch uses the forward difference (clamped at the top wall),
        # drain branch the backward difference (clamped at the bottom wall)
        grad_fill = dplus.copy()
        grad_fill[-1] = 0.0
        grad_drain = dminus.copy()
        grad_drain[0] = 0.0
        vgrads = np.concatenate([grad_fill, grad_drain])
        lo = np.concatenate([np.zeros(n_q), np.full(n_q, p_bal)])
        hi = np.concatenate([np.full(n_q, p_bal), np.full(n_q, phy.max_power_w)])
        p_all, phi_all = maximize_rate_value(beta_i, vgrads, lo, hi, phy)
        # utility and drift share the rate factor rcoef*ln(1+beta*p), so the
        # Hamiltonian is rcoef*phi plus the arrival transport term
        ham = rcoef * phi_all + abar * np.concatenate([grad_fill, grad_drain])
        ham = ham.reshape(2, n_q)
        p_all = p_all.reshape(2, n_q)
        if p_bal >= phy.max_power_w:  # no drain region anywhere in the box
            ham[1] = -np.inf
        # an empty queue cannot be drained: only the fill branch exists at the
        # bottom wall, which removes the option of earning utility on bits the
        # queue does not hold and makes backlog a genuine asset early on
        ham[1, 0] = -np.inf
        pick = np.argmax(ham, axis=0)
        cols = np.arange(n_q)
        return p_all[pick, cols], ham[pick, cols]

    # policy on the terminal slice, from the terminal gradient
    policy[-1], _ = step(terminal, float(beta[-1]))
    for i in range(grid.n_t - 2, -1, -1):
        p_i, ham_i = step(value[i + 1], float(beta[i]))
        value[i] = value[i + 1] + dt * ham_i
        policy[i] = p_i
    if not np.isfinite(value).all():
        raise SchemeError("backward sweep produced non-finite values")
    return value, policy


def drift_field(grid: GridSpec, policy, interference, phy: PhyParams,
                queue: QueueParams, noise_norm: float, mean_sq_gain: float = 1.0):
    """Normalized queue drift (n_t, n_q) realized by a power policy."""
    abar, rcoef = _rate_coeffs(phy, queue)
    beta = _beta_traj(interference, noise_norm, mean_sq_gain)
    return abar - rcoef * np.log1p(beta[:, None] * policy)


def fpk_forward(grid: GridSpec, rho0, policy, interference, phy: PhyParams,
                queue: QueueParams, noise_norm: float, mean_sq_gain: float = 1.0):
    """Forward transport of the backlog density under a power policy.

    Returns the (n_t, n_q) density field with rho0 reproduced at slice 0.
    """
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.shape != (grid.n_q,):
        raise ConfigError("initial density length does not match grid")
    if rho0.min() < 0:
        raise ConfigError("initial density must be nonnegative")
    beta = _beta_traj(interference, noise_norm, mean_sq_gain)
    _check_cfl(grid, float(beta.max()), phy, queue)

    drift = drift_field(grid, policy, interference, phy, queue, noise_norm, mean_sq_gain)
    w = grid.cell_widths()
    dq, dt = grid.dq, grid.dt
    rho = np.empty((grid.n_t, grid.n_q))
    rho[0] = rho0
    mass0 = float(density_mass(grid, rho0))

    for i in range(grid.n_t - 1):
        # face velocities between nodes; walls carry no flux so backlog
        # pools at y=0 (empty queue) and y=1 (full queue)
        u = 0.5 * (drift[i, :-1] + drift[i, 1:])
        umax = float(np.abs(u).max()) if u.size else 0.0
        # positivity needs dt_sub * |outflow| <= half-width wall cells
        n_sub = max(1, int(np.ceil(4.0 * dt * umax / dq))) if umax > 0 else 1
        dts = dt / n_sub
        cur = rho[i]
        for _ in range(n_sub):
            flux = np.maximum(u, 0.0) * cur[:-1] + np.minimum(u, 0.0) * cur[1:]
            div = np.zeros_like(cur)
            div[:-1] += flux
            div[1:] -= flux
            cur = cur - dts * div / w
        rho[i + 1] = cur

    if rho.min() < DENSITY_FLOOR:
        raise SchemeError(f"density went negative ({rho.min():.3e})")
    np.clip(rho, 0.0, None, out=rho)
    err = np.abs(density_mass(grid, rho) - mass0).max()
    if err > MASS_TOL:
        raise SchemeError(f"density mass drifted by {err:.3e} (> {MASS_TOL})")
    return rho


def mf_interference(grid: GridSpec, policy, rho, eta: float, mean_sq_gain: float = 1.0):
    """Mean-field interference eta * E[|h|^2] * integral of p * rho, per slice."""
    return eta * mean_sq_gain * np.trapezoid(np.asarray(policy) * np.asarray(rho),
                                         dx=grid.dq, axis=-1)


def _existence_violations(grid, value, policy, beta, phy, queue):
    """Count grid nodes where the stationarity root is degenerate (Eq.-style
    uniqueness diagnostic evaluated at the converged policy)."""
    _, rcoef = _rate_coeffs(phy, queue)
    grad = np.gradient(value, grid.dq, axis=1)
    v = beta[:, None] * rcoef * grad
    expr = 2.0 * v * (policy + phy.circuit_power_w) + beta[:, None] * np.log1p(beta[:, None] * policy)
    return int((np.abs(expr) <= EXISTENCE_TOL).sum())


def solve_mfg(grid: GridSpec, phy: PhyParams, queue: QueueParams,
              boundary: str = "exponential", *, noise_norm: float,
              mean_sq_gain: float = 1.0, rho0=None,
              damping: float = FP_DAMPING, tol: float = FP_TOL,
              max_iters: int = FP_MAX_ITERS, init: str = "half") -> MfgSolution:
    """Damped fixed-point iteration over the interference trajectory.

    The residual is the sup-norm change of the interference trajectory
    relative to the (normalized) noise power.  Raises ConvergenceError with
    the residual history when max_iters is exhausted.
    """
    if not 0.0 < damping <= 1.0:
        raise ConfigError("damping must lie in (0, 1]")
    if init not in ("zero", "half"):
        raise ConfigError("interference init must be 'zero' or 'half'")
    eta = phy.sbs_density
    terminal = terminal_value(boundary, grid.queues)
    if rho0 is None:
        rho0 = initial_density(grid)

    if init == "zero":
        interference = np.zeros(grid.n_t)
    else:
        interference = np.full(grid.n_t, 0.5 * eta * phy.max_power_w)

    residuals = []
    step = damping
    prev_x = None
    prev_r = None
    for iteration in range(1, max_iters + 1):
        value, policy = hjb_backward(grid, terminal, interference, phy, queue,
                                     noise_norm, mean_sq_gain)
        rho = fpk_forward(grid, rho0, policy, interference, phy, queue,
                          noise_norm, mean_sq_gain)
        i_new = mf_interference(grid, policy, rho, eta, mean_sq_gain)
        scale = max(noise_norm, float(np.abs(i_new).max()))
        residual = float(np.abs(i_new - interference).max() / scale)
        residuals.append(residual)
        if residual < tol:
            beta = _beta_traj(interference, noise_norm, mean_sq_gain)
            bad = _existence_violations(grid, value, policy, beta, phy, queue)
            if bad:
                log.warning("stationarity uniqueness diagnostic failed at %d grid nodes", bad)
            return MfgSolution(
                grid=grid, value=value, density=rho, policy=policy,
                interference=i_new, iterations=iteration, residuals=residuals,
                eta=eta, noise_norm=noise_norm, mean_sq_gain=mean_sq_gain,
                boundary=boundary, max_power_w=phy.max_power_w,
            )
        # Oscillating iterates shrink the step; calm ones recover toward the
        # configured damping.
        if len(residuals) > 1 and residual > residuals[-2]:
            step = max(0.5 * step, 0.2)
        else:
            step = min(1.1 * step, 1.0)
        # Secant-accelerated (depth-1 Anderson) mixing kills the slow
        # near-neutral modes of the interference map; fall back to the plain
        # damped step whenever the secant direction is degenerate.
        r_cur = i_new - interference
        nxt = None
        if prev_x is not None:
            dr = r_cur - prev_r
            denom = float(dr @ dr)
            if denom > 1e-300:
                gamma = float(r_cur @ dr) / denom
                if abs(gamma) < 25.0:
                    nxt = interference + step * r_cur - gamma * (
                        (interference - prev_x) + step * dr)
        prev_x = interference.copy()
        prev_r = r_cur
        if nxt is None or not np.all(np.isfinite(nxt)):
            nxt = interference + step * r_cur
        interference = np.maximum(nxt, 0.0)

    raise ConvergenceError(
        f"interference fixed point missed tol={tol} after {max_iters} iterations "
        f"(last residual {residuals[-1]:.3e})", residuals)
