import numpy as np
import pytest

from udnsim import ConfigError, load_solution, save_solution
from udnsim.solution_io import MAGIC, VERSION


def test_round_trip_is_bit_exact(tmp_path, small_solution):
    path = tmp_path / "sol.mfg"
    save_solution(path, small_solution)
    back = load_solution(path)
    assert back.grid == small_solution.grid
    for name in ("value", "density", "policy", "interference"):
        a, b = getattr(back, name), getattr(small_solution, name)
        assert a.dtype == np.float64
        assert np.array_equal(a, b)  # exact, not approximate
    assert back.iterations == small_solution.iterations
    assert back.residuals == pytest.approx(small_solution.residuals)
    assert back.eta == small_solution.eta
    assert back.noise_norm == small_solution.noise_norm
    assert back.mean_sq_gain == small_solution.mean_sq_gain
    assert back.boundary == small_solution.boundary
    assert back.max_power_w == small_solution.max_power_w
    back.validate()


def test_rewrite_is_deterministic(tmp_path, small_solution):
    p1, p2 = tmp_path / "a.mfg", tmp_path / "b.mfg"
    save_solution(p1, small_solution)
    save_solution(p2, small_solution)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic_rejected(tmp_path, small_solution):
    path = tmp_path / "sol.mfg"
    save_solution(path, small_solution)
    blob = path.read_bytes()
    path.write_bytes(b"X" + blob[1:])
    with pytest.raises(ConfigError):
        load_solution(path)


def test_bad_version_rejected(tmp_path, small_solution):
    path = tmp_path / "sol.mfg"
    save_solution(path, small_solution)
    blob = path.read_bytes()
    old = f"{MAGIC} {VERSION}".encode()
    new = f"{MAGIC} {VERSION + 1}".encode()
    path.write_bytes(blob.replace(old, new, 1))
    with pytest.raises(ConfigError):
        load_solution(path)


def test_truncated_payload_rejected(tmp_path, small_solution):
    path = tmp_path / "sol.mfg"
    save_solution(path, small_solution)
    blob = path.read_bytes()
    path.write_bytes(blob[:-16])
    with pytest.raises(ConfigError):
        load_solution(path)
