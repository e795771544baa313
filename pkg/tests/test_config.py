import pytest

from udnsim import ConfigError
from udnsim.config import load_config


def write(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def test_defaults_without_file():
    cfg = load_config(None)
    assert cfg.phy.bandwidth_hz == 1e6
    assert cfg.phy.max_power_w == 1.0
    assert cfg.queue.capacity_bits == 2_000_000
    assert cfg.grid.n_t == 2601
    assert cfg.grid.n_q == 101
    assert cfg.boundary == "exponential"
    assert cfg.raw["solver"]["noise_norm"] == 0.03
    assert cfg.dpp.v_coeff == -1.0
    assert cfg.raw["deployment"]["isd_units"] == 3.5
    assert cfg.jobs == 1
    assert cfg.output_dir == "out"


def test_file_overrides_and_inline_comments(tmp_path):
    cfg = load_config(write(tmp_path, """
[phy]
bandwidth_hz = 5e6   # half the default band
[solver]
n_t = 401 ; coarse
n_q = 11
boundary = linear
[deployment]
k = 3
[output]
dir = results
"""))
    assert cfg.phy.bandwidth_hz == 5e6
    assert cfg.grid.n_t == 401
    assert cfg.grid.n_q == 11
    assert cfg.boundary == "linear"
    assert cfg.raw["deployment"]["k"] == 3
    assert cfg.output_dir == "results"


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(ConfigError, match="section"):
        load_config(write(tmp_path, "[nonsense]\nx = 1\n"))


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="key"):
        load_config(write(tmp_path, "[phy]\nwattage = 3\n"))


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


@pytest.mark.parametrize("body", [
    "[phy]\nbandwidth_hz = lots\n",
    "[solver]\nboundary = parabolic\n",
    "[solver]\ninit = warm\n",
    "[solver]\nnoise_norm = 0\n",
    "[solver]\ndamping = 0\n",
    "[solver]\ndamping = 1.5\n",
    "[solver]\nmax_iters = 0\n",
    "[deployment]\nk = 0\n",
    "[deployment]\nisd_units = -1\n",
    "[simulate]\nn_replicates = 0\n",
    "[simulate]\nestimate_mode = kalman\n",
    "[simulate]\ninitial_backlog = full\n",
    "[sweep]\nkey = frequency\n",
])
def test_bad_values_rejected(tmp_path, body):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, body))


def test_bool_parsing(tmp_path):
    cfg = load_config(write(tmp_path, "[deployment]\nfading = no\n"))
    assert cfg.raw["deployment"]["fading"] is False
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[deployment]\nfading = maybe\n"))


def test_env_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("UDNSIM_OUTDIR", str(tmp_path / "env-out"))
    monkeypatch.setenv("UDNSIM_JOBS", "4")
    cfg = load_config(None)
    assert cfg.output_dir == str(tmp_path / "env-out")
    assert cfg.jobs == 4


@pytest.mark.parametrize("bad", ["zero", "0", "-2"])
def test_env_jobs_invalid(monkeypatch, bad):
    monkeypatch.setenv("UDNSIM_JOBS", bad)
    with pytest.raises(ConfigError):
        load_config(None)


def test_sweep_values_typed(tmp_path):
    cfg = load_config(write(tmp_path, "[sweep]\nkey = k\nvalues = 1, 2, 5\n"))
    key, values = cfg.sweep_values()
    assert key == "k"
    assert values == [1, 2, 5]
    assert all(isinstance(v, int) for v in values)

    cfg = load_config(write(tmp_path, "[sweep]\nkey = isd\nvalues = 3.5,6.5\n"))
    _, values = cfg.sweep_values()
    assert values == [3.5, 6.5]

    cfg = load_config(write(tmp_path, "[sweep]\nkey = boundary\nvalues = exponential, linear\n"))
    _, values = cfg.sweep_values()
    assert values == ["exponential", "linear"]


def test_sweep_values_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(None).sweep_values()
    cfg = load_config(write(tmp_path, "[sweep]\nkey = k\n"))
    with pytest.raises(ConfigError):
        cfg.sweep_values()
    cfg = load_config(write(tmp_path, "[sweep]\nkey = k\nvalues = 1, two\n"))
    with pytest.raises(ConfigError):
        cfg.sweep_values()
    cfg = load_config(write(tmp_path, "[sweep]\nkey = boundary\nvalues = exponential, weird\n"))
    with pytest.raises(ConfigError):
        cfg.sweep_values()
