"""Two-timescale episode simulation.

Scheduling decisions happen once per period; power, transmission,
interference and queue dynamics run every slot (100 slots per period in the
reference setup).  All SBSs move simultaneously within a slot: powers are
fixed first, then every scheduled UE sees the interference of that joint
choice.  Bits are integers end to end, so arrivals, service, drops and
backlog balance exactly.

Energy accounting separates the radio from the circuit.  A transmitter is
on only while the scheduled buffer holds data: if the backlog drains
mid-slot the carrier goes quiet for the rest of the slot, so the slot's
radiated energy is p * (served / rate).  Circuit power accrues every
second whether or not anything is sent — an episode with no traffic costs
exactly n_sbs * p0 * duration Joules.  Rates and the interference
measurements keep the conservative start-of-slot view in which all
concurrent transmissions overlap.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .baseline import pf_schedule
from .deployment import Deployment
from .errors import ConfigError
from .fields import MfgSolution, bilinear
from .phy import LN2, PhyParams, QueueParams
from .power_opt import maximize_rate_value
from .scheduler import DppParams, SchedulerState, dpp_step, expected_rate

METHODS = ("mfg", "baseline")


@dataclass
class EpisodeMetrics:
    method: str
    seed: int
    n_periods: int
    n_sbs: int
    n_ue: int
    arrived_bits: int = 0
    delivered_bits: int = 0
    dropped_bits: int = 0
    backlog_delta_bits: int = 0
    energy_j: float = 0.0
    ee_bits_per_j: float = 0.0
    outage_fraction: float = 0.0
    dropped_ratio: float = 0.0
    mean_power_w: float = 0.0
    interference_mean: float = 0.0
    utility: float = 0.0
    infeasible_slots: int = 0
    power_samples: np.ndarray | None = None


def derived_rng(seed, replicate: int, stream: int) -> np.random.Generator:
    """Deterministic child stream: (base seed, replicate index, stream tag)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, stream)))


def _sample_initial_backlog(solution: MfgSolution, n_ue: int, cap: int,
                            rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw of per-UE backlog from the solver's initial density."""
    grid = solution.grid
    rho = solution.density[0]
    # piecewise-linear CDF from the trapezoid masses between nodes
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (rho[:-1] + rho[1:]) * grid.dq)))
    cdf /= cdf[-1]
    u = rng.uniform(size=n_ue)
    return (np.interp(u, cdf, grid.queues) * cap).astype(np.int64)


def run_episode(deploy: Deployment, method: str, phy: PhyParams, queue: QueueParams,
                *, n_periods: int, seed: int, solution: MfgSolution | None = None,
                dpp: DppParams = DppParams(), qos_min_rate_bps: float | None = None,
                slots_per_period: int = 100, initial_backlog: str = "empty",
                estimate_mode: str = "arithmetic", drain_window_slots: int = 40,
                collect_power: bool = False,
                replicate: int = 0) -> EpisodeMetrics:
    """Simulate one episode and return its aggregate metrics.

    initial_backlog: 'empty' starts all queues at zero; 'density' samples
    each UE's backlog from the solution's initial density (mean-field
    consistency checks want the simulated population to start where the
    solver's density starts).
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    if method == "mfg" and solution is None:
        raise ConfigError("the mfg method needs a solved policy")
    if estimate_mode not in ("arithmetic", "exponential"):
        raise ConfigError(f"unknown estimate mode {estimate_mode!r}")
    if drain_window_slots < 1:
        raise ConfigError("drain_window_slots must be at least 1")
    if qos_min_rate_bps is None:
        qos_min_rate_bps = queue.arrival_rate_bps

    n_sbs, n_ue = deploy.n_sbs, deploy.n_ue
    k = deploy.k
    gains = deploy.gains
    serving_gain = deploy.serving_gains()
    noise = deploy.noise_norm
    cap = int(queue.capacity_bits)
    dt = queue.slot_duration_s
    lam = queue.arrival_rate_bps * dt
    rows = np.arange(n_sbs)
    ue_of = np.arange(n_ue).reshape(n_sbs, k)

    traffic = derived_rng(seed, replicate, 1)
    if initial_backlog == "density":
        if solution is None:
            raise ConfigError("density-initialized backlog needs a solution")
        queues = _sample_initial_backlog(solution, n_ue, cap, traffic)
    elif initial_backlog == "empty":
        queues = np.zeros(n_ue, dtype=np.int64)
    else:
        raise ConfigError("initial_backlog must be 'empty' or 'density'")
    backlog_start = int(queues.sum())
    dropped_per_ue = np.zeros(n_ue, dtype=np.int64)

    if method == "mfg":
        sched_states = [SchedulerState.fresh(k) for _ in range(n_sbs)]
    else:
        # global arrays; the per-SBS update rules are the op-level ones
        rate_avg = np.zeros(n_ue)
        rate_slots = 0
        i_est = np.zeros(n_sbs)
        i_count = 0
        p_floor = np.expm1(qos_min_rate_bps * LN2 / phy.bandwidth_hz)

    arrived = 0
    delivered = 0
    energy = 0.0
    power_sum = 0.0
    interference_sum = 0.0
    infeasible = 0
    n_slots_total = 0
    sched_slots = np.zeros(n_ue, dtype=np.int64)    # slots spent scheduled
    sched_rate_hz = np.zeros(n_ue)                  # per-Hz achieved rate sum
    sched_power = np.zeros(n_ue)                    # power sum while scheduled
    sched_periods = np.zeros(n_ue, dtype=np.int64)  # periods scheduled
    psamples = [] if collect_power else None

    for _ in range(n_periods):
        # --- slow timescale: pick one UE per SBS for the whole period
        if method == "mfg":
            scheduled = np.empty(n_sbs, dtype=int)
            for b in range(n_sbs):
                ids = ue_of[b]
                q_norm = queues[ids] / cap
                r_bps = expected_rate(solution, 0.0, q_norm, serving_gain[ids], phy)
                p_cand = bilinear(solution.grid, solution.policy, 0.0, q_norm)
                local = dpp_step(sched_states[b], queues[ids].astype(float),
                                 r_bps, p_cand, phy, dpp)
                scheduled[b] = ids[local]
        else:
            beta_all = serving_gain / (i_est[deploy.serving] + noise)
            lo_all = np.minimum(p_floor / np.maximum(beta_all, 1e-300), phy.max_power_w)
            p_all, _ = maximize_rate_value(beta_all, 0.0, lo_all, phy.max_power_w, phy)
            cand = phy.bandwidth_hz * np.log1p(p_all * beta_all) / LN2
            scheduled = np.empty(n_sbs, dtype=int)
            for b in range(n_sbs):
                scheduled[b] = ue_of[b, pf_schedule(cand[ue_of[b]], rate_avg[ue_of[b]])]
        sched_periods[scheduled] += 1
        g_cross = gains[scheduled]             # (B, B): row b = gains at b's UE
        g_own = g_cross[rows, rows]

        # --- fast timescale
        for s in range(slots_per_period):
            t_rel = s * dt
            q_norm = queues[scheduled] / cap
            if method == "mfg":
                powers = bilinear(solution.grid, solution.policy, t_rel, q_norm)
            else:
                beta = g_own / (i_est + noise)
                p_lo = p_floor / np.maximum(beta, 1e-300)
                bad = p_lo > phy.max_power_w
                infeasible += int(bad.sum())
                powers, _ = maximize_rate_value(beta, 0.0, np.minimum(p_lo, phy.max_power_w),
                                                phy.max_power_w, phy)
                powers = np.where(bad, phy.max_power_w, powers)
                # Finite-buffer myopic EE with an overload override.  The
                # server owns k queues and the rotation returns to each only
                # after serving the others, so its clearing duty is the CELL
                # aggregate backlog: when that demands more rate than the
                # per-slot EE argmax can supply within a rolling service
                # window, the transmitter abandons efficiency and stays at
                # the argmax.  Otherwise delivered bits saturate once the
                # scheduled queue is cleared while Joules keep rising, so the
                # efficient move is to spread the scheduled backlog over the
                # rest of the turn at the cheapest sufficient power (capped
                # at the argmax as the turn closes).  The QoS floor holds
                # regardless.
                pot_rate = phy.bandwidth_hz * np.log1p(powers * beta) / LN2
                window = drain_window_slots * dt
                cell_backlog = queues[ue_of].sum(axis=1).astype(float)
                need_cell = cell_backlog * LN2 / (phy.bandwidth_hz * window)
                p_emerg = np.expm1(np.minimum(need_cell, 40.0)) / np.maximum(beta, 1e-300)
                horizon = (slots_per_period - s) * dt
                need_own = queues[scheduled].astype(float) * LN2 / (phy.bandwidth_hz * horizon)
                p_own = np.expm1(np.minimum(need_own, 40.0)) / np.maximum(beta, 1e-300)
                drain = np.minimum(np.maximum(p_own, np.minimum(p_lo, phy.max_power_w)),
                                   powers)
                powers = np.where(p_emerg > powers, powers, drain)
                powers = np.where(bad, phy.max_power_w, powers)

            interference = g_cross @ powers - g_own * powers
            sinr = powers * g_own / (interference + noise)
            rate = phy.bandwidth_hz * np.log1p(sinr) / LN2
            service = (rate * dt).astype(np.int64)

            arrivals = traffic.poisson(lam, n_ue).astype(np.int64)
            after = queues + arrivals
            served = np.minimum(after[scheduled], service)
            after[scheduled] -= served
            dropped = np.maximum(after - cap, 0)
            queues = after - dropped

            # Transmit only while the scheduled buffer holds data: once the
            # backlog drains mid-slot the carrier goes quiet for the slot's
            # remainder.  Radiated energy is therefore p * (served / rate);
            # circuit power accrues for the full slot regardless.
            tx_time = np.where(rate > 0.0, served / np.maximum(rate, 1e-300), 0.0)
            radiated = float((powers * tx_time).sum())

            arrived += int(arrivals.sum())
            delivered += int(served.sum())
            dropped_per_ue += dropped
            energy += radiated + n_sbs * phy.circuit_power_w * dt
            power_sum += radiated / dt
            interference_sum += float(interference.mean())
            n_slots_total += 1
            sched_slots[scheduled] += 1
            sched_rate_hz[scheduled] += served / (dt * phy.bandwidth_hz)
            sched_power[scheduled] += powers
            if collect_power:
                psamples.append(powers.copy())

            if method == "baseline":
                # arithmetic running means, one slot for every SBS at once
                if estimate_mode == "arithmetic":
                    i_est = i_est + (interference - i_est) / (i_count + 1)
                else:
                    i_est = interference.copy() if i_count == 0 else 0.95 * i_est + 0.05 * interference
                i_count += 1
                # PF averaging tracks the rate the channel would support at the
                # myopic power, not the buffer-limited served rate; otherwise a
                # freshly drained UE looks starved and the rotation collapses.
                achieved = np.zeros(n_ue)
                achieved[scheduled] = pot_rate
                rate_avg = (rate_avg * rate_slots + achieved) / (rate_slots + 1)
                rate_slots += 1

    dropped_total = int(dropped_per_ue.sum())
    share = sched_periods / n_periods
    mean_rate = np.where(sched_slots > 0, sched_rate_hz / np.maximum(sched_slots, 1), 0.0)
    mean_pow = np.where(sched_slots > 0, sched_power / np.maximum(sched_slots, 1), 0.0)
    utility = float((share * mean_rate / (mean_pow + phy.circuit_power_w)).sum() / n_sbs)

    m = EpisodeMetrics(
        method=method, seed=seed, n_periods=n_periods, n_sbs=n_sbs, n_ue=n_ue,
        arrived_bits=arrived, delivered_bits=delivered, dropped_bits=dropped_total,
        backlog_delta_bits=int(queues.sum()) - backlog_start, energy_j=energy,
        ee_bits_per_j=delivered / energy if energy > 0 else 0.0,
        outage_fraction=float((dropped_per_ue > 0).mean()),
        dropped_ratio=dropped_total / arrived if arrived > 0 else 0.0,
        mean_power_w=power_sum / (n_slots_total * n_sbs),
        interference_mean=interference_sum / n_slots_total,
        utility=utility, infeasible_slots=infeasible,
    )
    if collect_power:
        m.power_samples = np.concatenate(psamples)
    return m


METRIC_FIELDS = ("ee_bits_per_j", "outage_fraction", "dropped_ratio",
                 "mean_power_w", "interference_mean", "utility", "energy_j",
                 "delivered_bits")


@dataclass
class ReplicationSummary:
    """Per-metric mean and 95% confidence half-width over seeded replicates."""

    n: int
    mean: dict = field(default_factory=dict)
    ci_half: dict = field(default_factory=dict)

    def lo(self, key):
        return self.mean[key] - self.ci_half[key]

    def hi(self, key):
        return self.mean[key] + self.ci_half[key]


def summarize_replications(metrics: list[EpisodeMetrics]) -> ReplicationSummary:
    if not metrics:
        raise ConfigError("no replicates to summarize")
    n = len(metrics)
    out = ReplicationSummary(n=n)
    tcrit = float(scipy.stats.t.ppf(0.975, n - 1)) if n > 1 else 0.0
    for key in METRIC_FIELDS:
        vals = np.array([float(getattr(m, key)) for m in metrics])
        out.mean[key] = float(vals.mean())
        out.ci_half[key] = float(tcrit * vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return out


def run_replications(deploy_fn, episode_fn, n_replicates: int, base_seed: int,
                     jobs: int = 1):
    """Run paired replicates: replicate i gets a deployment from
    deploy_fn(seed_i) and metrics from episode_fn(deployment, base_seed, i).

    Seeds derive deterministically from base_seed so reruns are identical;
    jobs > 1 runs episodes in a thread pool, preserving replicate order.
    Returns (metrics list, summary).
    """
    if n_replicates < 1:
        raise ConfigError("n_replicates must be at least 1")

    def one(i: int) -> EpisodeMetrics:
        dep_seed = np.random.SeedSequence(base_seed, spawn_key=(i, 0))
        return episode_fn(deploy_fn(dep_seed), base_seed, i)

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            metrics = list(pool.map(one, range(n_replicates)))
    else:
        metrics = [one(i) for i in range(n_replicates)]
    return metrics, summarize_replications(metrics)
