"""Experiment configuration: dataclass validation and the strict INI loader."""

import numpy as np
import pytest

from noisealloc.config import ExperimentConfig, load_config
from noisealloc.core import NoiseGrid
from noisealloc.exceptions import ConfigError

# ---------------------------------------------------------------------------
# INI loading


def test_load_shipped_example():
    cfg = load_config("configs/example.ini")
    assert cfg.backend == "analytic-linear"
    assert cfg.problem == "p1"
    assert cfg.seed == 1234
    assert cfg.output_dir == "runs/example"
    assert cfg.sigma_y == 10.0
    assert (cfg.sigma_min, cfg.sigma_max, cfg.bins) == (0.0, 10.0, 40)
    assert cfg.weights_kind == "uniform"
    assert cfg.epsilon == 9.0
    assert cfg.max_rounds == 200
    assert cfg.step_size == "auto"
    assert cfg.stop_tol == 1e-6


def test_load_missing_file_raises():
    with pytest.raises(ConfigError):
        load_config("configs/does-not-exist.ini")


def _write(tmp_path, text):
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    return path


def test_load_rejects_unknown_section(tmp_path):
    path = _write(tmp_path, "[run]\nproblem = p2\n[網]\nx = 1\n")
    with pytest.raises(ConfigError, match="unknown config section"):
        load_config(path)


def test_load_rejects_unknown_key(tmp_path):
    path = _write(tmp_path, "[run]\nproblem = p2\n[solver]\nepsilonn = 9\n")
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(path)


def test_load_rejects_unparsable_value(tmp_path):
    path = _write(tmp_path, "[run]\nproblem = p1\n[solver]\nepsilon = nineish\n")
    with pytest.raises(ConfigError, match="bad value"):
        load_config(path)


def test_load_strips_inline_comments(tmp_path):
    path = _write(
        tmp_path,
        "[run]\nproblem = p1  # additive cap\n[solver]\nepsilon = 9.0 ; budget\n",
    )
    cfg = load_config(path)
    assert cfg.problem == "p1" and cfg.epsilon == 9.0


def test_load_parses_explicit_weights(tmp_path):
    path = _write(
        tmp_path,
        "[run]\nproblem = p2\n[grid]\nbins = 4\n"
        "[weights]\nkind = explicit\nvalues = 1, 2 3,4\n",
    )
    cfg = load_config(path)
    assert cfg.weights_values == (1.0, 2.0, 3.0, 4.0)
    np.testing.assert_allclose(cfg.target_distribution().weights, [0.1, 0.2, 0.3, 0.4])


def test_load_parses_numeric_step_size(tmp_path):
    path = _write(tmp_path, "[run]\nproblem = p2\n[solver]\nstep_size = 0.25\n")
    assert load_config(path).step_size == 0.25


# ---------------------------------------------------------------------------
# field validation


def test_problem_epsilon_pairing():
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="p2", epsilon=9.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="p1", epsilon=None)
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="p1", epsilon=-2.0)
    assert ExperimentConfig(problem="p2").epsilon is None


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(backend="torch"),
        dict(problem="p3", epsilon=1.0),
        dict(problem="p1", epsilon=9.0, sigma_y=0.0),
        dict(problem="p1", epsilon=9.0, sigma_min=5.0, sigma_max=5.0),
        dict(problem="p1", epsilon=9.0, bins=0),
        dict(problem="p1", epsilon=9.0, max_rounds=0),
        dict(problem="p1", epsilon=9.0, step_size="fast"),
        dict(problem="p1", epsilon=9.0, stop_tol=0.0),
        dict(problem="p1", epsilon=9.0, mc_samples=1),
        dict(problem="p1", epsilon=9.0, sgd_batch_size=0),
        dict(problem="p1", epsilon=9.0, sgd_step_size=-1.0),
        dict(problem="p1", epsilon=9.0, step_schedule="geometric"),
        dict(problem="p1", epsilon=9.0, p2_normalization="mean"),
    ],
)
def test_config_rejects_bad_fields(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs)


def test_explicit_weights_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="p2", weights_kind="explicit")
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="p2", weights_kind="explicit", weights_values=(1.0, 2.0), bins=3)
    with pytest.raises(ConfigError):
        ExperimentConfig(
            problem="p2", weights_kind="explicit", weights_values=(0.0, 0.0), bins=2
        )
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="p2", weights_kind="uniform", weights_values=(1.0,), bins=1)


def test_point_mass_bin_range():
    cfg = ExperimentConfig(problem="p2", weights_kind="point-mass", weights_bin=39)
    assert cfg.target_distribution().weights[39] == 1.0
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="p2", weights_kind="point-mass", weights_bin=40)


# ---------------------------------------------------------------------------
# derived objects


def test_grid_and_model_construction():
    cfg = ExperimentConfig(problem="p2", sigma_min=0.0, sigma_max=20.0, bins=5)
    assert cfg.grid() == NoiseGrid(0.0, 20.0, 5)
    assert cfg.model().sigma_y == 10.0


def test_resolved_max_rounds_defaults():
    assert ExperimentConfig(problem="p1", epsilon=9.0).resolved_max_rounds == 200
    assert ExperimentConfig(problem="p2").resolved_max_rounds == 2000
    assert (
        ExperimentConfig(problem="p1", epsilon=9.0, backend="sgd-linear").resolved_max_rounds
        == 25
    )
    assert ExperimentConfig(problem="p2", backend="sgd-linear").resolved_max_rounds == 25
    assert ExperimentConfig(problem="p2", max_rounds=7).resolved_max_rounds == 7


def test_solver_config_log_scale_follows_problem():
    assert ExperimentConfig(problem="p1-log", epsilon=7.0).solver_config().log_scale
    assert not ExperimentConfig(problem="p1", epsilon=9.0).solver_config().log_scale
    sc = ExperimentConfig(problem="p1", epsilon=9.0, max_rounds=33).solver_config()
    assert sc.max_rounds == 33 and sc.epsilon == 9.0


def test_to_dict_round_trip():
    cfg = ExperimentConfig(
        problem="p2", weights_kind="explicit", weights_values=(1.0, 3.0), bins=2, seed=7
    )
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert isinstance(cfg.to_dict()["weights_values"], list)


def test_override_seed_and_output_dir():
    cfg = ExperimentConfig(problem="p2", seed=1, output_dir="runs/a")
    out = cfg.override(seed=9, output_dir="runs/b")
    assert (out.seed, out.output_dir) == (9, "runs/b")
    assert (cfg.seed, cfg.output_dir) == (1, "runs/a")
    assert cfg.override() == cfg
