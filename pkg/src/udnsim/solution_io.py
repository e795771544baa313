"""Solution file serialization.

Format (documented in docs/solution-format.md): a text magic line
``UDNSIM-MFG <version>``, one JSON header line with the grid and solver
metadata, then four little-endian float64 blocks in this order: value field,
density field, power policy (each n_t*n_q row-major) and the interference
trajectory (n_t).  Round-trips are bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError
from .fields import GridSpec, MfgSolution

MAGIC = "UDNSIM-MFG"
VERSION = 1


def save_solution(path, sol: MfgSolution):
    header = {
        "n_t": sol.grid.n_t,
        "n_q": sol.grid.n_q,
        "horizon_s": sol.grid.horizon_s,
        "eta": sol.eta,
        "noise_norm": sol.noise_norm,
        "mean_sq_gain": sol.mean_sq_gain,
        "boundary": sol.boundary,
        "max_power_w": sol.max_power_w,
        "iterations": sol.iterations,
        "residuals": sol.residuals,
    }
    with open(path, "wb") as f:
        f.write(f"{MAGIC} {VERSION}\n".encode("ascii"))
        f.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        for block in (sol.value, sol.density, sol.policy, sol.interference):
            f.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_solution(path) -> MfgSolution:
    with open(path, "rb") as f:
        magic = f.readline().decode("ascii", errors="replace").strip().split()
        if len(magic) != 2 or magic[0] != MAGIC:
            raise ConfigError(f"{path}: not a solution file")
        if int(magic[1]) != VERSION:
            raise ConfigError(f"{path}: unsupported solution format version {magic[1]}")
        header = json.loads(f.readline().decode("ascii"))
        grid = GridSpec(header["n_t"], header["n_q"], header["horizon_s"])
        n = grid.n_t * grid.n_q
        raw = np.frombuffer(f.read(), dtype="<f8")
        if raw.size != 3 * n + grid.n_t:
            raise ConfigError(f"{path}: truncated solution payload")
    value = raw[:n].reshape(grid.n_t, grid.n_q).copy()
    density = raw[n:2 * n].reshape(grid.n_t, grid.n_q).copy()
    policy = raw[2 * n:3 * n].reshape(grid.n_t, grid.n_q).copy()
    interference = raw[3 * n:].copy()
    return MfgSolution(
        grid=grid, value=value, density=density, policy=policy,
        interference=interference, iterations=header["iterations"],
        residuals=list(header["residuals"]), eta=header["eta"],
        noise_norm=header["noise_norm"], mean_sq_gain=header["mean_sq_gain"],
        boundary=header["boundary"], max_power_w=header["max_power_w"],
    )
