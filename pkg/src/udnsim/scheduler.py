"""Drift-plus-penalty UE scheduling on the slow timescale.

Once per period each SBS observes backlogs and expected rates, picks the
auxiliary one-hot (argmin of the virtual queues), schedules the UE maximizing
``q * r + Y - V * df/dlambda`` over one-hot vectors, then updates the virtual
queues by the auxiliary-minus-schedule difference and folds the schedule into
an exact running mean.  Ties break toward the lowest UE index everywhere.

The op-level vectors are unit-agnostic; the simulator feeds backlog in
bits and rates in bits/s, so the backlog-rate product dominates whenever
queues hold real work and the virtual-queue and penalty terms settle ties
among near-empty queues.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fields import MfgSolution, bilinear, interp_trajectory
from .phy import LN2, PhyParams

GRADIENT_MODELS = ("linear_ee", "zero")


@dataclass(frozen=True)
class DppParams:
    """Tradeoff coefficient V <= 0 and the utility-gradient model.

    More-negative V weighs the energy-efficiency penalty harder at the
    expense of backlog pressure; V sweeps of {-1, -10, -100} cover the
    tradeoff study.
    """

    v_coeff: float = -50.0
    gradient_model: str = "linear_ee"

    def __post_init__(self):
        if self.v_coeff > 0:
            raise ConfigError("v_coeff must be nonpositive")
        if self.gradient_model not in GRADIENT_MODELS:
            raise ConfigError(f"unknown gradient model {self.gradient_model!r}")


@dataclass
class SchedulerState:
    """Per-SBS bookkeeping carried across periods."""

    queue_bits: np.ndarray
    virtual: np.ndarray
    lam_avg: np.ndarray
    periods: int = 0

    @classmethod
    def fresh(cls, n_ue: int, queue_bits=None):
        q = np.zeros(n_ue) if queue_bits is None else np.asarray(queue_bits)
        return cls(queue_bits=q, virtual=np.zeros(n_ue), lam_avg=np.zeros(n_ue))


def expected_rate(sol: MfgSolution, t_in_period, q_norm, gain, phy: PhyParams):
    """Expected rate (bits/s) of a candidate UE if scheduled now: the
    equilibrium policy is looked up bilinearly at (t, q_norm) and combined
    with the UE's own normalized gain and the mean-field interference."""
    p = bilinear(sol.grid, sol.policy, t_in_period, q_norm)
    i_t = interp_trajectory(sol.grid, sol.interference, t_in_period)
    sinr = p * np.asarray(gain, dtype=float) / (i_t + sol.noise_norm)
    return phy.bandwidth_hz * np.log1p(sinr) / LN2


def penalty_gradient(rate_hz, power_w, phy: PhyParams, model: str = "linear_ee"):
    """d(utility)/d(schedule share) per UE under the selected utility model."""
    if model == "linear_ee":
        return np.asarray(rate_hz, dtype=float) / (np.asarray(power_w, dtype=float) + phy.circuit_power_w)
    if model == "zero":
        return np.zeros_like(np.asarray(rate_hz, dtype=float))
    raise ConfigError(f"unknown gradient model {model!r}")


def solve_auxiliary(virtual: np.ndarray) -> np.ndarray:
    """One-hot minimizer of the virtual queue vector (lowest index on ties)."""
    out = np.zeros(virtual.shape)
    out[int(np.argmin(virtual))] = 1.0
    return out


def schedule(q_vec, rate_vec, virtual, lam_avg, penalty, params: DppParams) -> np.ndarray:
    """One-hot argmax of q*r + Y - V * penalty (lowest index on ties).

    lam_avg is accepted for gradient models that need it; the linear model's
    penalty is precomputed by the caller via penalty_gradient.
    """
    objective = (np.asarray(q_vec, dtype=float) * np.asarray(rate_vec, dtype=float)
                 + np.asarray(virtual, dtype=float)
                 - params.v_coeff * np.asarray(penalty, dtype=float))
    out = np.zeros(objective.shape)
    out[int(np.argmax(objective))] = 1.0
    return out


def update_virtual_queue(virtual, aux, lam) -> np.ndarray:
    """Y <- Y + aux - lam, unclamped by design."""
    return np.asarray(virtual, dtype=float) + np.asarray(aux, dtype=float) - np.asarray(lam, dtype=float)


def dpp_step(state: SchedulerState, q_norm_vec, rate_hz_vec, power_vec,
             phy: PhyParams, params: DppParams) -> int:
    """One period of the scheduler: auxiliary, schedule, bookkeeping.

    Mutates state (virtual queues, exact running mean of schedules, period
    counter) and returns the scheduled UE index.
    """
    aux = solve_auxiliary(state.virtual)
    penalty = penalty_gradient(rate_hz_vec, power_vec, phy, params.gradient_model)
    lam = schedule(q_norm_vec, rate_hz_vec, state.virtual, state.lam_avg, penalty, params)
    state.virtual = update_virtual_queue(state.virtual, aux, lam)
    state.lam_avg = (state.lam_avg * state.periods + lam) / (state.periods + 1)
    state.periods += 1
    return int(np.argmax(lam))
