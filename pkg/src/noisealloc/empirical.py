"""Sampled-data pathway: synthetic pair generation, Monte Carlo conditional
risk (linear and log scale), and a plain mini-batch SGD trainer realizing the
inexact-training regime.

Determinism contract: every operation takes a seed (or Generator) and is
reproducible bit-for-bit. Derived streams use SeedSequence keyed by
(seed, tag, round, bin), so per-bin evaluations may run in any order or in
parallel and still produce results identical to sequential execution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    BinDistribution,
    EstimatorHandle,
    NoiseGrid,
    RiskProfile,
    normalize,
)
from .exceptions import DivergenceError, UnnormalizedWeightsError
from .linear import LinearEstimator, LinearGaussianModel, best_individual_gain

#: Floor applied inside log-risk estimation; E[log 0] is undefined and this is
#: far below any attainable squared-error risk in the test regime.
LOG_LOSS_FLOOR = 1e-12

# Stream tags for derived seeds.
_TAG_TRAIN = 0
_TAG_EVAL = 1
_TAG_LOG_EVAL = 2
_TAG_BASELINE = 3


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Deterministic child generator for (seed, *keys)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed for (seed, *keys); keeps sibling components
    (say, a baseline trainer and a solve trainer) on disjoint streams."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Synthetic training pairs: x = y + sigma * eta at per-sample levels."""

    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        for name in ("x", "y", "sigma"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (self.x.shape == self.y.shape == self.sigma.shape):
            raise ValueError("x, y, sigma must have identical shapes")

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class SgdConfig:
    """Mini-batch gradient descent settings for one training round.

    step_size = 0 is allowed and makes training a no-op (useful as a frozen
    control); everything else must be positive. With online noise generation
    an epoch has no intrinsic dataset length, so batches_per_epoch sets it.
    """

    epochs_per_round: int = 10
    batches_per_epoch: int = 50
    batch_size: int = 128
    step_size: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs_per_round", "batches_per_epoch", "batch_size"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not (np.isfinite(self.step_size) and self.step_size >= 0):
            raise ValueError(f"step_size must be >= 0, got {self.step_size!r}")


def sample_noise_levels(pi: BinDistribution, n: int, seed_or_rng) -> np.ndarray:
    """Draw n representatives i.i.d. from pi by inverse CDF over bin weights."""
    if not pi.is_normalized():
        raise UnnormalizedWeightsError("sample_noise_levels requires a normalized distribution")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = _as_rng(seed_or_rng)
    cdf = np.cumsum(pi.weights)
    cdf[-1] = 1.0  # guard the last edge against cumulative rounding
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return pi.grid.representatives[np.minimum(idx, pi.grid.bin_count - 1)]


def generate_pairs(model: LinearGaussianModel, sigmas, seed_or_rng) -> SampleBatch:
    """y ~ N(0, sigma_y^2), x = y + sigma * eta with eta ~ N(0,1), per sigma."""
    s = np.asarray(sigmas, dtype=float)
    if s.size == 0:
        raise ValueError("sigmas must be nonempty")
    rng = _as_rng(seed_or_rng)
    y = model.sigma_y * rng.standard_normal(s.shape)
    x = y + s * rng.standard_normal(s.shape)
    seed = seed_or_rng if isinstance(seed_or_rng, int) else None
    return SampleBatch(x=x, y=y, sigma=s, seed=seed)


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, stderr


def mc_conditional_risk(
    est: LinearEstimator, model: LinearGaussianModel, sigma: float, n: int, seed_or_rng
) -> tuple[float, float]:
    """Sample mean and standard error of (a x - y)^2 over n fresh pairs."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    batch = generate_pairs(model, np.full(n, float(sigma)), seed_or_rng)
    losses = np.square(est.a * batch.x - batch.y)
    return _mean_stderr(losses)


def log_risk_of_losses(losses, floor: float = LOG_LOSS_FLOOR) -> tuple[float, float]:
    """Mean and standard error of log(max(loss, floor))."""
    logs = np.log(np.maximum(np.asarray(losses, dtype=float), floor))
    return _mean_stderr(logs)


def mc_log_conditional_risk(
    est: LinearEstimator,
    model: LinearGaussianModel,
    sigma: float,
    n: int,
    seed_or_rng,
    floor: float = LOG_LOSS_FLOOR,
) -> tuple[float, float]:
    """Sample mean/stderr of log loss (with zero floor) over n fresh pairs."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    batch = generate_pairs(model, np.full(n, float(sigma)), seed_or_rng)
    return log_risk_of_losses(np.square(est.a * batch.x - batch.y), floor=floor)


#: Training diverged once |a| exceeds this bound.
DIVERGENCE_BOUND = 1e3


def sgd_train_linear(
    model: LinearGaussianModel,
    pi: BinDistribution,
    cfg: SgdConfig,
    warm_start: LinearEstimator = LinearEstimator(0.0),
    rng: np.random.Generator | None = None,
) -> LinearEstimator:
    """Mini-batch gradient descent on mean (a x - y)^2 with sigma ~ pi.

    Runs epochs_per_round epochs of batches_per_epoch fresh batches each
    (noise generated online), warm-started from the previous round's
    estimator. Deterministic given cfg.seed (or an explicit Generator).
    """
    if not pi.is_normalized():
        raise UnnormalizedWeightsError("sgd_train_linear requires a normalized distribution")
    if cfg.step_size == 0.0:
        return warm_start
    rng = derive_rng(cfg.seed, _TAG_TRAIN) if rng is None else rng
    a = float(warm_start.a)
    for _ in range(cfg.epochs_per_round * cfg.batches_per_epoch):
        sigmas = sample_noise_levels(pi, cfg.batch_size, rng)
        batch = generate_pairs(model, sigmas, rng)
        grad = 2.0 * float(np.mean(batch.x * (a * batch.x - batch.y)))
        a -= cfg.step_size * grad
        if abs(a) > DIVERGENCE_BOUND:
            raise DivergenceError(
                f"gain diverged (|a| = {abs(a):.3g} > {DIVERGENCE_BOUND:g}); reduce step_size"
            )
    return LinearEstimator(a)


class SgdLinearTrainer:
    """TrainerContract backend: inexact SGD training + Monte Carlo risk.

    Training is warm-started across rounds (finite-epochs regime). Risk
    evaluation draws fresh samples with seeds derived per (round, bin), so
    re-evaluating the same handle reproduces identical estimates bit-for-bit.
    A trainer instance is single-owner mutable state: one solver per instance.
    """

    def __init__(
        self,
        model: LinearGaussianModel,
        grid: NoiseGrid,
        sgd: SgdConfig = SgdConfig(),
        mc_samples: int = 10**5,
        seed: int = 0,
        initial: LinearEstimator = LinearEstimator(0.0),
    ):
        if mc_samples < 2:
            raise ValueError(f"mc_samples must be >= 2, got {mc_samples}")
        self.model = model
        self.grid = grid
        self.sgd = sgd
        self.mc_samples = int(mc_samples)
        self.seed = int(seed)
        self._round = 0
        self._current = initial

    def train(self, weights: BinDistribution) -> EstimatorHandle:
        pi = normalize(weights)
        rng = derive_rng(self.seed, _TAG_TRAIN, self._round)
        self._current = sgd_train_linear(self.model, pi, self.sgd, self._current, rng=rng)
        handle = EstimatorHandle(self._round, self._current)
        self._round += 1
        return handle

    def evaluate(self, handle: EstimatorHandle, grid: NoiseGrid) -> RiskProfile:
        est = handle.params
        values = np.empty(grid.bin_count)
        stderr = np.empty(grid.bin_count)
        for i, sigma in enumerate(grid.representatives):
            rng = derive_rng(self.seed, _TAG_EVAL, handle.round_index, i)
            values[i], stderr[i] = mc_conditional_risk(est, self.model, sigma, self.mc_samples, rng)
        return RiskProfile(grid, values, stderr=stderr)

    def evaluate_log(self, handle: EstimatorHandle, grid: NoiseGrid) -> RiskProfile:
        est = handle.params
        values = np.empty(grid.bin_count)
        stderr = np.empty(grid.bin_count)
        for i, sigma in enumerate(grid.representatives):
            rng = derive_rng(self.seed, _TAG_LOG_EVAL, handle.round_index, i)
            values[i], stderr[i] = mc_log_conditional_risk(
                est, self.model, sigma, self.mc_samples, rng
            )
        return RiskProfile(grid, values, stderr=stderr)


def mc_log_baseline(
    model: LinearGaussianModel,
    grid: NoiseGrid,
    n: int = 10**5,
    seed: int = 0,
    floor: float = LOG_LOSS_FLOOR,
) -> np.ndarray:
    """Monte Carlo estimate of the log-scale normalizers L_delta(sigma) =
    exp(E[log loss of the best individual estimator at sigma])."""
    values = np.empty(grid.bin_count)
    for i, sigma in enumerate(grid.representatives):
        est = LinearEstimator(float(best_individual_gain(model, sigma)))
        rng = derive_rng(seed, _TAG_BASELINE, i)
        mean_log, _ = mc_log_conditional_risk(est, model, sigma, n, rng, floor=floor)
        values[i] = np.exp(mean_log)
    return values
