"""Shared vocabulary: noise grids, bin distributions, risk profiles, and the
trainer contract consumed by every solver.

All types here are immutable value objects (arrays are stored read-only), so
they are safe to share across threads; the operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, runtime_checkable

import numpy as np

from .exceptions import (
    DegenerateDistributionError,
    GridMismatchError,
    GridRangeError,
    UnnormalizedWeightsError,
)

#: Absolute tolerance under which a weight vector counts as normalized.
NORMALIZATION_ATOL = 1e-9

#: Role tags for BinDistribution. Multiplier vectors (lambda) are unnormalized.
ROLE_NORMALIZED = "normalized"
ROLE_MULTIPLIER = "multiplier"


def _readonly(values, n: int | None = None) -> np.ndarray:
    """Copy `values` to a float array, optionally check length, freeze it."""
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} values, got {arr.shape[0]}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class NoiseGrid:
    """Equal-width discretization of the noise range [sigma_min, sigma_max].

    The representative of each bin is its midpoint, so for `bin_count` bins of
    width w the representatives are sigma_min + w/2, sigma_min + 3w/2, ...
    """

    sigma_min: float
    sigma_max: float
    bin_count: int
    representatives: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 <= self.sigma_min < self.sigma_max) or not all(
            math.isfinite(v) for v in (self.sigma_min, self.sigma_max)
        ):
            raise GridRangeError(
                f"need 0 <= sigma_min < sigma_max, got [{self.sigma_min}, {self.sigma_max}]"
            )
        if int(self.bin_count) != self.bin_count or self.bin_count < 1:
            raise GridRangeError(f"bin_count must be a positive integer, got {self.bin_count}")
        object.__setattr__(self, "bin_count", int(self.bin_count))
        w = self.bin_width
        reps = self.sigma_min + w * (np.arange(self.bin_count) + 0.5)
        object.__setattr__(self, "representatives", _readonly(reps))

    @property
    def bin_width(self) -> float:
        return (self.sigma_max - self.sigma_min) / self.bin_count

    def edges(self) -> np.ndarray:
        """Bin edges, length bin_count + 1."""
        return np.linspace(self.sigma_min, self.sigma_max, self.bin_count + 1)

    def __len__(self) -> int:
        return self.bin_count

    def __eq__(self, other) -> bool:
        if not isinstance(other, NoiseGrid):
            return NotImplemented
        return (
            self.sigma_min == other.sigma_min
            and self.sigma_max == other.sigma_max
            and self.bin_count == other.bin_count
        )

    def __hash__(self) -> int:
        return hash((self.sigma_min, self.sigma_max, self.bin_count))


def make_grid(sigma_min: float, sigma_max: float, bin_count: int) -> NoiseGrid:
    """Build a NoiseGrid with equal-width bins and midpoint representatives."""
    return NoiseGrid(float(sigma_min), float(sigma_max), bin_count)


def check_same_grid(a, b, what: str = "operands") -> None:
    """Compare the grids of two carriers (or two bare NoiseGrid objects)."""
    grid_a = a.grid if hasattr(a, "grid") else a
    grid_b = b.grid if hasattr(b, "grid") else b
    if grid_a != grid_b:
        raise GridMismatchError(f"{what} live on different noise grids")


@dataclass(frozen=True, eq=False)
class BinDistribution:
    """Nonnegative weights over the bins of a grid.

    `role` is an explicit tag: "normalized" vectors (p, pi) must sum to 1
    within NORMALIZATION_ATOL; "multiplier" vectors (lambda) carry raw mass.
    """

    grid: NoiseGrid
    weights: np.ndarray
    role: str = ROLE_NORMALIZED

    def __post_init__(self):
        w = _readonly(self.weights, self.grid.bin_count)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if self.role not in (ROLE_NORMALIZED, ROLE_MULTIPLIER):
            raise ValueError(f"unknown role {self.role!r}")
        if self.role == ROLE_NORMALIZED and abs(float(w.sum()) - 1.0) > NORMALIZATION_ATOL:
            raise UnnormalizedWeightsError(
                f"normalized-role weights sum to {w.sum()!r}, expected 1 +- {NORMALIZATION_ATOL}"
            )
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, grid: NoiseGrid) -> "BinDistribution":
        return cls(grid, np.full(grid.bin_count, 1.0 / grid.bin_count))

    @classmethod
    def point_mass(cls, grid: NoiseGrid, bin_index: int) -> "BinDistribution":
        if not 0 <= bin_index < grid.bin_count:
            raise ValueError(f"bin index {bin_index} out of range for {grid.bin_count} bins")
        w = np.zeros(grid.bin_count)
        w[bin_index] = 1.0
        return cls(grid, w)

    @classmethod
    def multiplier(cls, grid: NoiseGrid, weights) -> "BinDistribution":
        return cls(grid, weights, role=ROLE_MULTIPLIER)

    def is_normalized(self) -> bool:
        return abs(float(self.weights.sum()) - 1.0) <= NORMALIZATION_ATOL


def normalize(d: BinDistribution) -> BinDistribution:
    """Scale weights to sum to 1, preserving proportions; zeros stay zero.

    Already-normalized input (within NORMALIZATION_ATOL) is returned with its
    weight bits untouched, which makes normalize idempotent bit-for-bit.
    """
    total = float(d.weights.sum())
    if total == 0.0:
        raise DegenerateDistributionError("cannot normalize all-zero weights")
    if abs(total - 1.0) <= NORMALIZATION_ATOL:
        if d.role == ROLE_NORMALIZED:
            return d
        return BinDistribution(d.grid, d.weights)
    return BinDistribution(d.grid, d.weights / total)


@dataclass(frozen=True, eq=False)
class RiskProfile:
    """Per-bin conditional risk values R(f|sigma) for one fixed estimator.

    `stderr` carries Monte Carlo standard errors when the values are sampled
    estimates; it is None for exact (closed-form) profiles. Values are
    risk-like quantities; gap profiles produced by `gap_profile` may dip
    slightly negative under evaluation noise, so no sign constraint is
    enforced here.
    """

    grid: NoiseGrid
    values: np.ndarray
    stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        v = _readonly(self.values, self.grid.bin_count)
        if not np.all(np.isfinite(v)):
            raise ValueError("risk values must be finite")
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            s = _readonly(self.stderr, self.grid.bin_count)
            if not np.all(np.isfinite(s)) or np.any(s < 0):
                raise ValueError("stderr values must be finite and nonnegative")
            object.__setattr__(self, "stderr", s)

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


@dataclass(frozen=True, eq=False)
class BaselineRiskTable:
    """Per-bin best-individual risks r(sigma): the lower envelope over
    estimators. `log_values` optionally stores the log-scale normalizers
    L_delta(sigma) = exp(E[log loss of the best individual]) used by the
    log-scale constraint."""

    grid: NoiseGrid
    values: np.ndarray
    log_values: Optional[np.ndarray] = None

    def __post_init__(self):
        v = _readonly(self.values, self.grid.bin_count)
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("baseline risks must be finite and nonnegative")
        object.__setattr__(self, "values", v)
        if self.log_values is not None:
            lv = _readonly(self.log_values, self.grid.bin_count)
            if not np.all(np.isfinite(lv)) or np.any(lv <= 0):
                raise ValueError("log-scale normalizers must be finite and positive")
            object.__setattr__(self, "log_values", lv)


def gap_profile(risk: RiskProfile, baseline: BaselineRiskTable) -> RiskProfile:
    """Per-bin risk gap R(f|sigma) - r(sigma). No clamping is applied; small
    negative entries are possible under Monte Carlo noise and callers decide
    how to treat them."""
    check_same_grid(risk, baseline, "risk profile and baseline table")
    return RiskProfile(risk.grid, risk.values - baseline.values, stderr=risk.stderr)


def psnr_from_mse(mse: float) -> float:
    """PSNR in decibels: -10 * log10(mse). Requires mse > 0."""
    m = float(mse)
    if not math.isfinite(m) or m <= 0.0:
        raise ValueError(f"psnr_from_mse requires mse > 0, got {mse!r}")
    return -10.0 * math.log10(m)


@dataclass(frozen=True, eq=False)
class EstimatorHandle:
    """Opaque token identifying one trained estimator.

    `round_index` keys the reproducible evaluation seed stream; `params` is
    backend-specific payload that solvers never inspect.
    """

    round_index: int
    params: Any


@runtime_checkable
class TrainerContract(Protocol):
    """The pluggable "train under sampling weights" capability.

    Implementations must be deterministic given their construction seed:
    the n-th train() call on a fresh instance with identical inputs yields an
    identical estimator, and evaluate() of the same handle on the same grid
    is reproducible bit-for-bit.
    """

    grid: NoiseGrid

    def train(self, weights: BinDistribution) -> EstimatorHandle: ...

    def evaluate(self, handle: EstimatorHandle, grid: NoiseGrid) -> RiskProfile: ...


def check_trainer(trainer) -> None:
    """Validate the trainer contract surface (duck-typed)."""
    for attr in ("grid", "train", "evaluate"):
        if not hasattr(trainer, attr):
            raise TypeError(
                f"trainer {type(trainer).__name__} does not satisfy the contract: missing {attr!r}"
            )
    if not isinstance(trainer.grid, NoiseGrid):
        raise TypeError("trainer.grid must be a NoiseGrid")


def check_distribution(
    d, grid: NoiseGrid, role: str | None = None, name: str = "distribution"
) -> None:
    """Validate that `d` is a BinDistribution on `grid` (and role, if given)."""
    if not isinstance(d, BinDistribution):
        raise TypeError(f"{name} must be a BinDistribution, got {type(d).__name__}")
    if d.grid != grid:
        raise GridMismatchError(f"{name} lives on a different noise grid")
    if role == ROLE_NORMALIZED and not d.is_normalized():
        raise UnnormalizedWeightsError(f"{name} must be normalized")
