"""Estimator-style wrappers around the dual-ascent solvers.

These follow the scikit-learn conventions (constructor stores hyperparameters
verbatim, fit returns self, fitted attributes carry a trailing underscore,
get_params/set_params work for cloning and grid search). The fitted "model"
is a training noise-level distribution, so fit consumes a trainer backend
rather than an (X, y) pair; that is the one deliberate deviation from the
interface, and sample_noise_levels plays the role of the predict step by
drawing noise levels from the fitted distribution.
"""

from __future__ import annotations

from typing import Optional
import warnings

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from .core import BaselineRiskTable, BinDistribution
from .empirical import sample_noise_levels
from .solvers import SolverConfig, compute_baseline, solve_constrained, solve_minimax_gap


class _FittedSamplerMixin:
    """Shared post-fit helpers; subclasses set result_, grid_, weights_."""

    def sample_noise_levels(self, n: int, seed=0) -> np.ndarray:
        """Draw n noise levels from the fitted training distribution."""
        check_is_fitted(self, "result_")
        pi = BinDistribution(self.grid_, self.weights_)
        return sample_noise_levels(pi, n, seed)

    def _store_common(self, result, trainer):
        self.result_ = result
        self.grid_ = trainer.grid
        self.weights_ = result.pi.weights
        self.multipliers_ = result.multipliers.weights
        self.history_ = result.history
        self.handle_ = result.handle
        self.converged_ = result.converged
        self.n_rounds_ = result.rounds_used
        self.max_gap_ = result.max_gap
        self.gap_spread_ = result.gap_spread
        self.overall_risk_ = result.overall_risk
        self.dual_value_ = result.dual_value
        self.duality_gap_ = result.duality_gap
        if not result.converged:
            warnings.warn(result.advisory, ConvergenceWarning, stacklevel=3)


class ConstrainedRiskMinimizer(_FittedSamplerMixin, BaseEstimator):
    """Minimize overall risk under p subject to a per-level excess-risk cap.

    Parameters mirror SolverConfig; epsilon is the cap (additive on risk, or
    multiplicative via log_scale=True). fit takes a trainer backend plus an
    optional target distribution p (uniform when omitted) and baseline table
    (computed from the trainer by per-bin point-mass training when omitted).
    """

    def __init__(
        self,
        epsilon: float = 9.0,
        log_scale: bool = False,
        max_rounds: int = 200,
        step_size="auto",
        step_schedule: str = "constant",
        stop_tol: float = 1e-6,
    ):
        self.epsilon = epsilon
        self.log_scale = log_scale
        self.max_rounds = max_rounds
        self.step_size = step_size
        self.step_schedule = step_schedule
        self.stop_tol = stop_tol

    def fit(
        self,
        trainer,
        p: Optional[BinDistribution] = None,
        baseline: Optional[BaselineRiskTable] = None,
        log_baseline: Optional[np.ndarray] = None,
    ):
        config = SolverConfig(
            epsilon=self.epsilon,
            max_rounds=self.max_rounds,
            step_size=self.step_size,
            step_schedule=self.step_schedule,
            stop_tol=self.stop_tol,
            log_scale=self.log_scale,
        )
        if baseline is None:
            baseline = compute_baseline(trainer)
        result = solve_constrained(trainer, baseline, config, p=p, log_baseline=log_baseline)
        self._store_common(result, trainer)
        return self


class MinimaxGapSolver(_FittedSamplerMixin, BaseEstimator):
    """Find the training distribution minimizing the worst per-level excess
    risk; the attained value estimates the smallest feasible cap.

    normalization selects the simplex step: "projection" (Euclidean,
    convergent default) or "sum" (clip and renormalize).
    """

    def __init__(
        self,
        max_rounds: int = 2000,
        step_size="auto",
        step_schedule: str = "constant",
        stop_tol: float = 1e-6,
        normalization: str = "projection",
    ):
        self.max_rounds = max_rounds
        self.step_size = step_size
        self.step_schedule = step_schedule
        self.stop_tol = stop_tol
        self.normalization = normalization

    def fit(self, trainer, baseline: Optional[BaselineRiskTable] = None):
        config = SolverConfig(
            epsilon=None,
            max_rounds=self.max_rounds,
            step_size=self.step_size,
            step_schedule=self.step_schedule,
            stop_tol=self.stop_tol,
            p2_normalization=self.normalization,
        )
        if baseline is None:
            baseline = compute_baseline(trainer)
        result = solve_minimax_gap(trainer, baseline, config)
        self._store_common(result, trainer)
        self.epsilon_min_ = result.epsilon_min
        self.epsilon_min_best_ = result.epsilon_min_best
        return self
