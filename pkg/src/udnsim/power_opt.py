"""Pointwise transmit-power optimization.

The per-state Hamiltonian contribution that depends on power is

    phi(p) = ln(1 + beta p) / (p + p0) - vgrad * ln(1 + beta p)

(spectral energy efficiency in nats minus the rate-weighted marginal value of
backlog).  Interior stationary points satisfy

    v (p + p0)^2 = beta (p + p0) - (1 + beta p) ln(1 + beta p),   v = vgrad*beta

whose left side minus right side (psi below) changes sign from - to + at most
once on [0, p_max]; every interior maximum of phi is such an up-crossing, so
the global maximizer is found by comparing phi at the up-crossing root and at
the interval endpoints.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .phy import PhyParams

# scan grid density for the up-crossing bracket and bisection depth; 46
# halvings of a unit interval reach ~1.4e-14, far below the 1e-4*p_max gate
N_SCAN = 25
N_BISECT = 46


def _phi(p, beta, vgrad, p0):
    return np.log1p(beta * p) * (1.0 / (p + p0) - vgrad)


def _psi(p, beta, v, p0):
    s = p + p0
    return v * s * s - beta * s + (1.0 + beta * p) * np.log1p(beta * p)


def maximize_rate_value(beta, vgrad, lo, hi, phy: PhyParams, n_scan=N_SCAN):
    """Vectorized argmax of phi over [lo, hi] elementwise.

    beta, vgrad, lo, hi broadcast together.  Returns (p, phi_at_p).
    """
    p0 = phy.circuit_power_w
    beta, vgrad, lo, hi = np.broadcast_arrays(
        np.asarray(beta, dtype=float),
        np.asarray(vgrad, dtype=float),
        np.asarray(lo, dtype=float),
        np.asarray(hi, dtype=float),
    )
    shape = beta.shape
    beta = beta.ravel()
    vgrad = vgrad.ravel()
    lo = np.clip(lo.ravel(), 0.0, phy.max_power_w)
    hi = np.clip(hi.ravel(), lo, phy.max_power_w)
    v = vgrad * beta

    # scan for the single - to + crossing of psi
    frac = np.linspace(0.0, 1.0, n_scan)[:, None]
    ps = lo[None, :] + (hi - lo)[None, :] * frac
    sign_pos = _psi(ps, beta[None, :], v[None, :], p0) > 0.0
    up = sign_pos[1:] & ~sign_pos[:-1]
    has_root = up.any(axis=0)
    k = np.argmax(up, axis=0)  # first up-crossing interval, valid where has_root

    idx = np.arange(beta.size)
    blo = np.where(has_root, ps[k, idx], lo)
    bhi = np.where(has_root, ps[k + 1, idx], hi)
    for _ in range(N_BISECT):
        mid = 0.5 * (blo + bhi)
        pos = _psi(mid, beta, v, p0) > 0.0
        bhi = np.where(pos, mid, bhi)
        blo = np.where(pos, blo, mid)
    root = 0.5 * (blo + bhi)

    cand = np.stack([lo, hi, np.where(has_root, root, lo)])
    val = _phi(cand, beta[None, :], vgrad[None, :], p0)
    best = np.argmax(val, axis=0)
    p = cand[best, idx]
    # beta = 0 carries no rate: never radiate
    p = np.where(beta <= 0.0, lo, p)
    out_val = np.where(beta <= 0.0, 0.0, val[best, idx])
    return p.reshape(shape), out_val.reshape(shape)


def optimal_power_pointwise(beta, dgamma_dq, phy: PhyParams, lo=0.0, hi=None):
    """Scalar optimal power for channel quality beta and value gradient dgamma_dq.

    dgamma_dq is the marginal value of rate (utility per nat of spectral
    rate); the stationarity condition uses v = dgamma_dq * beta.  The result
    is clamped to [lo, hi] inside [0, max_power_w].
    """
    if not (np.isfinite(beta) and np.isfinite(dgamma_dq)):
        raise ConfigError("optimal_power_pointwise requires finite inputs")
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    if hi is None:
        hi = phy.max_power_w
    if beta == 0.0:
        return float(np.clip(0.0, lo, hi))
    p, _ = maximize_rate_value(beta, dgamma_dq, lo, hi, phy, n_scan=65)
    return float(p)


def existence_check(v, power_w, beta, phy: PhyParams, tol=1e-12) -> bool:
    """Uniqueness diagnostic for the stationarity condition at (v, p, beta).

    True when |2 v (p + p0) + beta ln(1 + beta p)| exceeds tol, i.e. the
    stationary point is locally one-sided and the root is well defined.
    """
    expr = 2.0 * v * (power_w + phy.circuit_power_w) + beta * np.log1p(beta * power_w)
    return bool(abs(expr) > tol)
