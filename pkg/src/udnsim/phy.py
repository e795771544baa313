"""Physical-layer and queueing primitives.

Link rates follow the interference-limited Shannon form
``r = bandwidth * log2(1 + p * gain / (interference + noise))``; biased-up
transmit power ``p + circuit_power`` is the energy actually drawn, and the
instantaneous energy efficiency is their ratio.  Queues hold bits, evolve once
per slot, and drop only at the capacity wall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

LN2 = math.log(2.0)


def dbm_to_watts(dbm: float) -> float:
    """Convert a dBm figure to linear Watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PhyParams:
    """Radio constants shared by the solver, scheduler and simulator.

    bandwidth_hz     channel bandwidth (omega), Hz
    noise_dbm        thermal noise power, dBm (converted once to Watts)
    max_power_w      transmit power ceiling, W
    circuit_power_w  always-on circuit draw added to radiated power, W
    sbs_density      interference coupling constant (eta): mean total
                     cross-link gain at a UE after serving-gain normalization
    channel_drift    drift scale of the channel process; only the static
                     channel model (0) is supported
    """

    bandwidth_hz: float = 1e6
    noise_dbm: float = -70.0
    max_power_w: float = 1.0
    circuit_power_w: float = 1.0
    sbs_density: float = 0.25
    channel_drift: float = 0.0

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz must be positive")
        if self.max_power_w <= 0:
            raise ConfigError("max_power_w must be positive")
        if self.circuit_power_w <= 0:
            raise ConfigError("circuit_power_w must be positive")
        if self.sbs_density < 0:
            raise ConfigError("sbs_density must be nonnegative")
        if self.channel_drift != 0.0:
            raise ConfigError("only the static channel model (channel_drift=0) is supported")

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)


@dataclass(frozen=True)
class QueueParams:
    """Traffic constants: mean arrival rate, queue capacity, slot length."""

    arrival_rate_bps: float = 200e3
    capacity_bits: float = 2e6
    slot_duration_s: float = 0.01

    def __post_init__(self):
        if self.arrival_rate_bps < 0:
            raise ConfigError("arrival_rate_bps must be nonnegative")
        if self.capacity_bits <= 0:
            raise ConfigError("capacity_bits must be positive")
        if self.slot_duration_s <= 0:
            raise ConfigError("slot_duration_s must be positive")


@dataclass(frozen=True)
class LinkState:
    """One UE's link sample: normalized serving gain (unit population mean),
    interference seen at the UE and its QSI, all in normalized units."""

    gain: float
    interference_w: float
    queue_bits: float


@dataclass
class QueueVector:
    """Per-UE backlog bookkeeping for one SBS."""

    backlog_bits: np.ndarray
    dropped_bits: np.ndarray = field(default=None)

    def __post_init__(self):
        self.backlog_bits = np.asarray(self.backlog_bits)
        if self.dropped_bits is None:
            self.dropped_bits = np.zeros_like(self.backlog_bits)


def instantaneous_rate(power_w, gain, interference_w, phy: PhyParams):
    """Shannon rate in bits/s; accepts scalars or arrays.

    gain and interference must share one normalization (any common factor
    cancels against the noise conversion done by the caller).
    """
    power_w = np.asarray(power_w, dtype=float)
    sinr = power_w * np.asarray(gain, dtype=float) / (
        np.asarray(interference_w, dtype=float) + phy.noise_w
    )
    return phy.bandwidth_hz * np.log1p(sinr) / LN2


def ee_utility(rate_bps, power_w, phy: PhyParams):
    """Bits per Joule for the given radiated power."""
    return np.asarray(rate_bps, dtype=float) / (np.asarray(power_w, dtype=float) + phy.circuit_power_w)


def queue_step(q_bits, arrival_bits, served_bits, queue: QueueParams):
    """One slot of queue dynamics.

    Returns (q_next, dropped): service floors at an empty queue, arrivals
    beyond capacity are dropped, so
    ``q_next = min(cap, max(0, q + arrivals - served))`` and
    ``dropped = max(0, max(0, q + arrivals - served) - cap)``.
    """
    q = np.asarray(q_bits)
    after = np.maximum(q + np.asarray(arrival_bits) - np.asarray(served_bits), 0)
    cap = queue.capacity_bits
    if isinstance(after, np.ndarray) and after.dtype.kind in "iu":
        cap = int(cap)
    dropped = np.maximum(after - cap, 0)
    return after - dropped, dropped


def sample_arrivals(rng: np.random.Generator, queue: QueueParams, n=None):
    """Poisson arrivals (bits) for one slot, mean arrival_rate * slot."""
    lam = queue.arrival_rate_bps * queue.slot_duration_s
    return rng.poisson(lam, size=n)


@dataclass(frozen=True)
class PathlossModel:
    """Log-distance pathloss with optional log-normal shadowing.

    PL(d) = ref_loss_db + 10 * exponent * log10(d / ref_distance_km), in dB.
    The default reproduces the common small-cell curve
    140.7 + 36.7 log10(d_km).  Distances below min_distance_m are floored.
    """

    ref_loss_db: float = 140.7
    exponent: float = 3.67
    ref_distance_km: float = 1.0
    shadowing_std_db: float = 8.0
    min_distance_m: float = 3.0

    def __post_init__(self):
        if self.exponent <= 0:
            raise ConfigError("pathloss exponent must be positive")
        if self.min_distance_m <= 0:
            raise ConfigError("min_distance_m must be positive")
        if self.shadowing_std_db < 0:
            raise ConfigError("shadowing_std_db must be nonnegative")


def pathloss_gain(distance_m, model: PathlossModel = PathlossModel(), rng: np.random.Generator | None = None):
    """Linear power gain over the given distance(s) in meters.

    With an rng, one log-normal shadowing draw per entry is applied; without,
    the gain is deterministic.
    """
    d = np.maximum(np.asarray(distance_m, dtype=float), model.min_distance_m)
    pl_db = model.ref_loss_db + 10.0 * model.exponent * np.log10(d / (model.ref_distance_km * 1e3))
    if rng is not None and model.shadowing_std_db > 0:
        pl_db = pl_db + rng.normal(0.0, model.shadowing_std_db, size=pl_db.shape)
    return 10.0 ** (-pl_db / 10.0)
