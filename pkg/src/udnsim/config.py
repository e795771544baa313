"""Run configuration: INI-style key = value files with strict schema checks.

Unknown sections or keys are rejected; every key has a typed default, so an
empty file is a valid (reference-like) configuration.  Environment variables
UDNSIM_OUTDIR and UDNSIM_JOBS override the output directory and worker count
without touching the file.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .fields import BOUNDARY_KINDS, GridSpec
from .phy import PathlossModel, PhyParams, QueueParams
from .scheduler import GRADIENT_MODELS, DppParams

OUTDIR_ENV = "UDNSIM_OUTDIR"
JOBS_ENV = "UDNSIM_JOBS"

SWEEP_KEYS = ("isd", "k", "v", "boundary")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default); choices validated after parsing
SCHEMA = {
    "phy": {
        "bandwidth_hz": (float, 1e6),
        "noise_dbm": (float, -70.0),
        "max_power_w": (float, 1.0),
        "circuit_power_w": (float, 1.0),
        "sbs_density": (float, 0.25),
    },
    "traffic": {
        "arrival_rate_bps": (float, 200e3),
        "capacity_bits": (float, 2e6),
        "slot_duration_s": (float, 0.01),
    },
    "pathloss": {
        "ref_loss_db": (float, 140.7),
        "exponent": (float, 3.67),
        "shadowing_std_db": (float, 8.0),
        "min_distance_m": (float, 3.0),
    },
    "solver": {
        "n_t": (int, 2601),
        "n_q": (int, 101),
        "horizon_s": (float, 1.0),
        "boundary": (str, "exponential"),
        "damping": (float, 0.5),
        "tol": (float, 1e-4),
        "max_iters": (int, 200),
        "init": (str, "half"),
        "noise_norm": (float, 0.03),
        "mean_sq_gain": (float, 1.0),
        "rho0_mean": (float, 0.5),
        "rho0_variance": (float, 0.1),
    },
    "scheduler": {
        "v_coeff": (float, -50.0),
        "gradient_model": (str, "linear_ee"),
        "qos_min_rate_bps": (float, 200e3),
    },
    "deployment": {
        "isd_units": (float, 3.5),
        "k": (int, 5),
        "area_km2": (float, 0.5625),
        "jitter_frac": (float, 0.15),
        "fading": (_bool, True),
        "cross_isolation_db": (float, 15.0),
        "rician_k_db": (float, 10.0),
    },
    "simulate": {
        "n_periods": (int, 30),
        "slots_per_period": (int, 100),
        "n_replicates": (int, 20),
        "base_seed": (int, 20240),
        "estimate_mode": (str, "arithmetic"),
        "initial_backlog": (str, "empty"),
        "drain_window_slots": (int, 40),
    },
    "sweep": {
        "key": (str, ""),
        "values": (str, ""),
    },
    "output": {
        "dir": (str, "out"),
    },
}

CHOICES = {
    ("solver", "boundary"): BOUNDARY_KINDS,
    ("solver", "init"): ("zero", "half"),
    ("scheduler", "gradient_model"): GRADIENT_MODELS,
    ("simulate", "estimate_mode"): ("arithmetic", "exponential"),
    ("simulate", "initial_backlog"): ("empty", "density"),
    ("sweep", "key"): ("",) + SWEEP_KEYS,
}


@dataclass
class RunConfig:
    phy: PhyParams
    queue: QueueParams
    pathloss: PathlossModel
    grid: GridSpec
    dpp: DppParams
    raw: dict = field(default_factory=dict)
    output_dir: str = "out"
    jobs: int = 1

    def __getitem__(self, pair):
        section, key = pair
        return self.raw[section][key]

    @property
    def boundary(self) -> str:
        return self.raw["solver"]["boundary"]

    def sweep_values(self):
        key = self.raw["sweep"]["key"]
        text = self.raw["sweep"]["values"]
        if not key:
            raise ConfigError("config has no [sweep] key")
        items = [v.strip() for v in text.split(",") if v.strip()]
        if not items:
            raise ConfigError("config has no [sweep] values")
        if key == "boundary":
            for v in items:
                if v not in BOUNDARY_KINDS:
                    raise ConfigError(f"unknown boundary {v!r} in sweep values")
            return key, items
        caster = int if key == "k" else float
        try:
            return key, [caster(v) for v in items]
        except ValueError:
            raise ConfigError(f"[sweep] values for {key!r} must be numbers: {text!r}") from None


def _parse_file(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, text in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")
            values[(section, key)] = text
    return values


def load_config(path=None) -> RunConfig:
    """Parse, type-check and assemble a run configuration.

    path None loads pure defaults.  Raises ConfigError on unknown keys, type
    errors, bad choices or inconsistent parameter values.
    """
    text_values = _parse_file(path) if path is not None else {}
    raw = {}
    for section, keys in SCHEMA.items():
        raw[section] = {}
        for key, (parse, default) in keys.items():
            if (section, key) in text_values:
                text = text_values[(section, key)]
                try:
                    raw[section][key] = parse(text)
                except ValueError as exc:
                    raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
            else:
                raw[section][key] = default
            choices = CHOICES.get((section, key))
            if choices is not None and raw[section][key] not in choices:
                raise ConfigError(
                    f"[{section}] {key} must be one of {choices}, got {raw[section][key]!r}")

    outdir = os.environ.get(OUTDIR_ENV, raw["output"]["dir"])
    jobs_text = os.environ.get(JOBS_ENV, "1")
    try:
        jobs = int(jobs_text)
    except ValueError as exc:
        raise ConfigError(f"{JOBS_ENV} must be an integer, got {jobs_text!r}") from exc
    if jobs < 1:
        raise ConfigError(f"{JOBS_ENV} must be positive")

    p = raw["phy"]
    t = raw["traffic"]
    pl = raw["pathloss"]
    s = raw["solver"]
    d = raw["scheduler"]
    cfg = RunConfig(
        phy=PhyParams(bandwidth_hz=p["bandwidth_hz"], noise_dbm=p["noise_dbm"],
                      max_power_w=p["max_power_w"], circuit_power_w=p["circuit_power_w"],
                      sbs_density=p["sbs_density"]),
        queue=QueueParams(arrival_rate_bps=t["arrival_rate_bps"],
                          capacity_bits=t["capacity_bits"],
                          slot_duration_s=t["slot_duration_s"]),
        pathloss=PathlossModel(ref_loss_db=pl["ref_loss_db"], exponent=pl["exponent"],
                               shadowing_std_db=pl["shadowing_std_db"],
                               min_distance_m=pl["min_distance_m"]),
        grid=GridSpec(s["n_t"], s["n_q"], s["horizon_s"]),
        dpp=DppParams(v_coeff=d["v_coeff"], gradient_model=d["gradient_model"]),
        raw=raw, output_dir=outdir, jobs=jobs,
    )
    if raw["solver"]["noise_norm"] <= 0:
        raise ConfigError("[solver] noise_norm must be positive")
    if raw["solver"]["tol"] <= 0 or raw["solver"]["max_iters"] < 1:
        raise ConfigError("[solver] tol must be positive and max_iters at least 1")
    if not 0 < raw["solver"]["damping"] <= 1:
        raise ConfigError("[solver] damping must lie in (0, 1]")
    if raw["deployment"]["k"] < 1 or raw["deployment"]["isd_units"] <= 0:
        raise ConfigError("[deployment] needs k >= 1 and positive isd_units")
    if raw["simulate"]["n_periods"] < 1 or raw["simulate"]["n_replicates"] < 1:
        raise ConfigError("[simulate] needs at least one period and one replicate")
    if raw["simulate"]["drain_window_slots"] < 1:
        raise ConfigError("[simulate] drain_window_slots must be at least 1")
    if raw["scheduler"]["qos_min_rate_bps"] < 0:
        raise ConfigError("[scheduler] qos_min_rate_bps must be nonnegative")
    return cfg
