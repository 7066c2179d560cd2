"""Experiment configuration: a frozen record of every run setting plus a
strict INI loader (stdlib configparser). Unknown sections or keys are
rejected so config typos fail fast instead of silently running defaults.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import asdict, dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from .core import BinDistribution, NoiseGrid, normalize
from .exceptions import ConfigError
from .linear import LinearGaussianModel
from .solvers import SolverConfig

BACKENDS = ("analytic-linear", "sgd-linear")
PROBLEMS = ("p1", "p2", "p1-log")
WEIGHT_KINDS = ("uniform", "point-mass", "explicit")

#: Round limits applied when [solver] max_rounds is omitted. The minimax
#: problem needs the long limit; the SGD backend is capped low because each
#: round is expensive and extra rounds buy only multiplier jitter.
DEFAULT_MAX_ROUNDS = {"analytic-linear": 200, "sgd-linear": 25}
DEFAULT_MAX_ROUNDS_MINIMAX = {"analytic-linear": 2000, "sgd-linear": 25}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated settings for one solver or oracle run."""

    backend: str = "analytic-linear"
    problem: str = "p1"
    seed: int = 0
    output_dir: str = "runs/out"
    sigma_y: float = 10.0
    sigma_min: float = 0.0
    sigma_max: float = 10.0
    bins: int = 40
    weights_kind: str = "uniform"
    weights_bin: int = 0
    weights_values: Optional[Tuple[float, ...]] = None
    epsilon: Optional[float] = None
    max_rounds: Optional[int] = None
    step_size: Union[str, float] = "auto"
    step_schedule: str = "constant"
    stop_tol: float = 1e-6
    p2_normalization: str = "projection"
    mc_samples: int = 100000
    sgd_epochs_per_round: int = 10
    sgd_batches_per_epoch: int = 50
    sgd_batch_size: int = 512
    sgd_step_size: float = 3e-4

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.weights_kind not in WEIGHT_KINDS:
            raise ConfigError(f"weights kind must be one of {WEIGHT_KINDS}, got {self.weights_kind!r}")
        if int(self.seed) != self.seed:
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if not (np.isfinite(self.sigma_y) and self.sigma_y > 0):
            raise ConfigError(f"sigma_y must be positive, got {self.sigma_y!r}")
        if not (0 <= self.sigma_min < self.sigma_max and np.isfinite(self.sigma_max)):
            raise ConfigError(
                f"need 0 <= sigma_min < sigma_max, got [{self.sigma_min!r}, {self.sigma_max!r}]"
            )
        if int(self.bins) != self.bins or self.bins < 1:
            raise ConfigError(f"bins must be a positive integer, got {self.bins!r}")
        object.__setattr__(self, "bins", int(self.bins))

        if self.problem == "p2":
            if self.epsilon is not None:
                raise ConfigError("problem p2 finds the smallest cap itself; remove epsilon")
        else:
            if self.epsilon is None:
                raise ConfigError(f"problem {self.problem} requires epsilon")
            e = float(self.epsilon)
            if np.isnan(e) or e < 0:
                raise ConfigError(f"epsilon must be >= 0, got {self.epsilon!r}")
            object.__setattr__(self, "epsilon", e)

        if self.weights_kind == "point-mass":
            if int(self.weights_bin) != self.weights_bin or not (0 <= self.weights_bin < self.bins):
                raise ConfigError(
                    f"point-mass bin must be an integer in [0, {self.bins}), got {self.weights_bin!r}"
                )
            object.__setattr__(self, "weights_bin", int(self.weights_bin))
        if self.weights_kind == "explicit":
            if self.weights_values is None:
                raise ConfigError("explicit weights need a values list")
            vals = tuple(float(v) for v in self.weights_values)
            if len(vals) != self.bins:
                raise ConfigError(f"got {len(vals)} weight values for {self.bins} bins")
            arr = np.asarray(vals)
            if not np.all(np.isfinite(arr) & (arr >= 0)) or arr.sum() <= 0:
                raise ConfigError("explicit weights must be nonnegative with a positive sum")
            object.__setattr__(self, "weights_values", vals)
        elif self.weights_values is not None:
            raise ConfigError(f"values list is only valid with kind=explicit, not {self.weights_kind!r}")

        if self.max_rounds is not None:
            if int(self.max_rounds) != self.max_rounds or self.max_rounds < 1:
                raise ConfigError(f"max_rounds must be a positive integer, got {self.max_rounds!r}")
            object.__setattr__(self, "max_rounds", int(self.max_rounds))
        if isinstance(self.step_size, str):
            if self.step_size != "auto":
                raise ConfigError(f'step_size must be "auto" or a positive number, got {self.step_size!r}')
        else:
            s = float(self.step_size)
            if not (np.isfinite(s) and s > 0):
                raise ConfigError(f"step_size must be positive, got {self.step_size!r}")
            object.__setattr__(self, "step_size", s)
        if not (np.isfinite(self.stop_tol) and self.stop_tol > 0):
            raise ConfigError(f"stop_tol must be positive, got {self.stop_tol!r}")
        if int(self.mc_samples) != self.mc_samples or self.mc_samples < 2:
            raise ConfigError(f"samples_per_bin must be an integer >= 2, got {self.mc_samples!r}")
        object.__setattr__(self, "mc_samples", int(self.mc_samples))
        for name in ("sgd_epochs_per_round", "sgd_batches_per_epoch", "sgd_batch_size"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not (np.isfinite(self.sgd_step_size) and self.sgd_step_size >= 0):
            raise ConfigError(f"sgd step_size must be >= 0, got {self.sgd_step_size!r}")
        # SolverConfig re-validates schedule/normalization tokens.
        SolverConfig(
            epsilon=None,
            step_schedule=self.step_schedule,
            p2_normalization=self.p2_normalization,
        )

    @property
    def resolved_max_rounds(self) -> int:
        if self.max_rounds is not None:
            return self.max_rounds
        table = DEFAULT_MAX_ROUNDS_MINIMAX if self.problem == "p2" else DEFAULT_MAX_ROUNDS
        return table[self.backend]

    def grid(self) -> NoiseGrid:
        return NoiseGrid(self.sigma_min, self.sigma_max, self.bins)

    def model(self) -> LinearGaussianModel:
        return LinearGaussianModel(self.sigma_y)

    def target_distribution(self, grid: Optional[NoiseGrid] = None) -> BinDistribution:
        grid = self.grid() if grid is None else grid
        if self.weights_kind == "uniform":
            return BinDistribution.uniform(grid)
        if self.weights_kind == "point-mass":
            return BinDistribution.point_mass(grid, self.weights_bin)
        return normalize(BinDistribution.multiplier(grid, self.weights_values))

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            epsilon=self.epsilon,
            max_rounds=self.resolved_max_rounds,
            step_size=self.step_size,
            step_schedule=self.step_schedule,
            stop_tol=self.stop_tol,
            log_scale=self.problem == "p1-log",
            p2_normalization=self.p2_normalization,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["weights_values"] is not None:
            d["weights_values"] = list(d["weights_values"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("weights_values") is not None:
            d["weights_values"] = tuple(d["weights_values"])
        return cls(**d)

    def override(self, seed: Optional[int] = None, output_dir: Optional[str] = None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        return cfg


def _parse_float_list(text: str) -> Tuple[float, ...]:
    tokens = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    return tuple(float(t) for t in tokens)


# section -> key -> (config field, parser)
_SCHEMA = {
    "run": {
        "backend": ("backend", str),
        "problem": ("problem", str),
        "seed": ("seed", int),
        "output_dir": ("output_dir", str),
    },
    "model": {"sigma_y": ("sigma_y", float)},
    "grid": {
        "sigma_min": ("sigma_min", float),
        "sigma_max": ("sigma_max", float),
        "bins": ("bins", int),
    },
    "weights": {
        "kind": ("weights_kind", str),
        "bin": ("weights_bin", int),
        "values": ("weights_values", _parse_float_list),
    },
    "solver": {
        "epsilon": ("epsilon", float),
        "max_rounds": ("max_rounds", int),
        "step_size": ("step_size", lambda s: s if s == "auto" else float(s)),
        "step_schedule": ("step_schedule", str),
        "stop_tol": ("stop_tol", float),
        "p2_normalization": ("p2_normalization", str),
    },
    "monte-carlo": {"samples_per_bin": ("mc_samples", int)},
    "sgd": {
        "epochs_per_round": ("sgd_epochs_per_round", int),
        "batches_per_epoch": ("sgd_batches_per_epoch", int),
        "batch_size": ("sgd_batch_size", int),
        "step_size": ("sgd_step_size", float),
    },
}


def load_config(path) -> ExperimentConfig:
    """Parse and validate an INI experiment config.

    Raises ConfigError for a missing file, malformed syntax, unknown
    sections or keys, unparsable values, or invalid field combinations.
    """
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    fields = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            field_name, parse = _SCHEMA[section][key]
            try:
                fields[field_name] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc
    return ExperimentConfig(**fields)
