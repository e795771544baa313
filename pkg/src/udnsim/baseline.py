"""Benchmark transmission policy: proportional-fair scheduling with myopic
per-slot energy-efficiency power control against an interference estimate
built from past measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .phy import LN2, PhyParams
from .power_opt import maximize_rate_value

PF_FLOOR = 1e-6
ESTIMATE_MODES = ("arithmetic", "exponential")


@dataclass
class BaselineState:
    """Per-SBS bookkeeping: PF rate averages and the interference estimate."""

    queue_bits: np.ndarray
    rate_avg: np.ndarray
    rate_slots: int = 0
    interference_est: float = 0.0
    meas_count: int = 0

    @classmethod
    def fresh(cls, n_ue: int, queue_bits=None):
        q = np.zeros(n_ue) if queue_bits is None else np.asarray(queue_bits)
        return cls(queue_bits=q, rate_avg=np.zeros(n_ue))


def pf_schedule(rate_vec, rate_avg) -> int:
    """Index of the UE maximizing rate / average-rate (floored averages);
    ties and the cold start resolve to the lowest index."""
    ratio = np.asarray(rate_vec, dtype=float) / np.maximum(np.asarray(rate_avg, dtype=float), PF_FLOOR)
    return int(np.argmax(ratio))


def myopic_power(gain, interference_w, noise_w, phy: PhyParams,
                 qos_min_rate_bps: float = 0.0):
    """Instantaneous EE maximizer subject to a minimum-rate floor.

    Returns (power_w, infeasible).  The QoS floor fixes the lowest power that
    meets qos_min_rate_bps at the estimated interference; when even max power
    cannot, the SBS transmits at max power and flags infeasibility.
    """
    if interference_w < 0 or noise_w <= 0:
        raise ConfigError("interference must be nonnegative and noise positive")
    beta = gain / (interference_w + noise_w)
    if beta <= 0.0:
        if qos_min_rate_bps > 0.0:
            return phy.max_power_w, True
        return 0.0, False
    p_lo = np.expm1(qos_min_rate_bps * LN2 / phy.bandwidth_hz) / beta
    if p_lo > phy.max_power_w:
        return phy.max_power_w, True
    p, _ = maximize_rate_value(beta, 0.0, p_lo, phy.max_power_w, phy)
    return float(p), False


def update_interference_estimate(estimate, count, measurement,
                                 mode: str = "arithmetic", alpha: float = 0.05):
    """Fold one interference measurement into the running estimate.

    arithmetic: exact running mean; exponential: (1-alpha) est + alpha m.
    Both start at the first measurement.  Returns (estimate, count).
    """
    if mode not in ESTIMATE_MODES:
        raise ConfigError(f"unknown estimate mode {mode!r}")
    if count == 0:
        return float(measurement), 1
    if mode == "arithmetic":
        return estimate + (measurement - estimate) / (count + 1), count + 1
    return (1.0 - alpha) * estimate + alpha * measurement, count + 1


def update_rate_averages(state: BaselineState, achieved_bps):
    """Per-slot arithmetic running mean of achieved rates (0 when idle)."""
    n = state.rate_slots
    state.rate_avg = (state.rate_avg * n + np.asarray(achieved_bps, dtype=float)) / (n + 1)
    state.rate_slots = n + 1
