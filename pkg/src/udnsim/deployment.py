"""Network geometry: jittered square SBS grid with k UEs per cell.

All link gains are normalized by the geometric mean of the serving gains, so
the typical (median-like) serving link has unit gain, the noise floor becomes
noise / geomean-serving-gain, and the interference coupling constant eta is
the mean total normalized cross gain seen at a UE.  The geometric mean is the
right anchor for the solver's generic player: shadowing and fading make the
arithmetic mean tail-dominated, and a policy tuned to that mean link serves
far too fast for the links most UEs actually have.  Interference, which adds
linearly, keeps its arithmetic mean through eta, so measured and solved
interference stay directly comparable.

Cross links (UE to a non-serving SBS) carry an extra flat isolation loss on
top of distance pathloss, the usual small-cell wall/penetration term: serving
links terminate inside the cell while interference arrives from outside it.
Without it a grid this dense is interference-limited to the point where no
power policy can carry the offered load.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .phy import PathlossModel, PhyParams, pathloss_gain

ISD_UNIT_M = 20.0
DEFAULT_AREA_KM2 = 0.5625


@dataclass
class Deployment:
    sbs_xy: np.ndarray        # (B, 2) meters
    ue_xy: np.ndarray         # (M, 2) meters
    serving: np.ndarray       # (M,) SBS index of each UE
    gains: np.ndarray         # (M, B) normalized link gains
    eta: float                # mean total normalized cross gain at a UE
    noise_norm: float         # noise power / geomean serving gain
    ref_serving_gain: float   # physical linear geomean serving gain
    isd_units: float
    k: int
    area_km2: float
    cross_isolation_db: float = 0.0

    @property
    def n_sbs(self) -> int:
        return self.sbs_xy.shape[0]

    @property
    def n_ue(self) -> int:
        return self.ue_xy.shape[0]

    def serving_gains(self) -> np.ndarray:
        return self.gains[np.arange(self.n_ue), self.serving]


def rician_power_fading(rng: np.random.Generator, shape, k_db: float) -> np.ndarray:
    """Unit-mean Rician power fading draws: |sqrt(K/(K+1)) + CN(0, 1/(K+1))|^2
    with K the linear line-of-sight factor.  K=0 (k_db -> -inf) is Rayleigh."""
    k_lin = 10.0 ** (k_db / 10.0)
    los = np.sqrt(k_lin / (k_lin + 1.0))
    sigma = np.sqrt(1.0 / (2.0 * (k_lin + 1.0)))
    re = los + rng.normal(0.0, sigma, size=shape)
    im = rng.normal(0.0, sigma, size=shape)
    return re * re + im * im


def grid_side(isd_units: float, area_km2: float = DEFAULT_AREA_KM2) -> int:
    """Number of SBS rows/columns: the square side divided by the inter-site
    distance, rounded to the nearest whole grid."""
    if isd_units <= 0:
        raise ConfigError("isd_units must be positive")
    side_m = np.sqrt(area_km2) * 1e3
    return max(1, round(side_m / (isd_units * ISD_UNIT_M)))


def generate_deployment(isd_units: float, k: int, phy: PhyParams,
                        pathloss: PathlossModel = PathlossModel(),
                        seed=0, area_km2: float = DEFAULT_AREA_KM2,
                        jitter_frac: float = 0.15, fading: bool = True,
                        cross_isolation_db: float = 15.0,
                        rician_k_db: float = 10.0) -> Deployment:
    """Draw one deployment: SBSs near the square-grid points, k UEs uniform
    in each cell, every UE served by its cell's SBS, one shadowing (and
    optionally Rician fading) draw per link, fixed for the episode.
    Non-serving links are attenuated by cross_isolation_db.  rician_k_db
    sets the fading K-factor (line-of-sight to scattered power ratio);
    K -> -inf dB recovers Rayleigh fading."""
    if k < 1:
        raise ConfigError("k must be at least 1")
    if cross_isolation_db < 0:
        raise ConfigError("cross_isolation_db must be nonnegative")
    rng = np.random.default_rng(seed)
    side_m = np.sqrt(area_km2) * 1e3
    n_side = grid_side(isd_units, area_km2)
    cell = side_m / n_side

    centers = (np.arange(n_side) + 0.5) * cell
    gx, gy = np.meshgrid(centers, centers, indexing="ij")
    sbs = np.column_stack([gx.ravel(), gy.ravel()])
    sbs = sbs + rng.uniform(-jitter_frac * cell, jitter_frac * cell, size=sbs.shape)
    n_sbs = sbs.shape[0]

    # k UEs uniform in each (un-jittered) cell, served by that cell's SBS
    base = np.repeat(np.column_stack([gx.ravel(), gy.ravel()]), k, axis=0)
    ue = base + rng.uniform(-0.5 * cell, 0.5 * cell, size=(n_sbs * k, 2))
    serving = np.repeat(np.arange(n_sbs), k)

    d = np.linalg.norm(ue[:, None, :] - sbs[None, :, :], axis=2)
    gains = pathloss_gain(d, pathloss, rng)
    if fading:
        gains = gains * rician_power_fading(rng, gains.shape, rician_k_db)

    rows = np.arange(n_sbs * k)
    isolation = 10.0 ** (-cross_isolation_db / 10.0)
    scale = np.full_like(gains, isolation)
    scale[rows, serving] = 1.0
    gains = gains * scale

    ref_serving = float(np.exp(np.mean(np.log(gains[rows, serving]))))
    gains_norm = gains / ref_serving
    cross = gains_norm.sum(axis=1) - gains_norm[rows, serving]
    return Deployment(
        sbs_xy=sbs, ue_xy=ue, serving=serving, gains=gains_norm,
        eta=float(cross.mean()), noise_norm=phy.noise_w / ref_serving,
        ref_serving_gain=ref_serving, isd_units=isd_units, k=k,
        area_km2=area_km2, cross_isolation_db=cross_isolation_db,
    )
