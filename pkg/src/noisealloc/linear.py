r"""Closed-form linear-Gaussian backend.

Signal model: clean signal y ~ N(0, sigma_y^2), observation x = y + sigma*eta
with eta ~ N(0, 1) independent of y. Estimators are scalar gains f(x) = a*x.

Training on noise levels sigma ~ pi reduces to one scalar: with
sbar2 = sum_i pi_i sigma_i^2 (the effective training variance), the
pi-weighted risk min is attained at

    a = sigma_y^2 / (sigma_y^2 + sbar2),

and the conditional risk of any gain a at level sigma expands to

    E[(a x - y)^2 | sigma] = a^2 (sigma_y^2 + sigma^2) - 2 a sigma_y^2 + sigma_y^2.

Because the trained estimator depends on pi only through sbar2, a brute-force
scan over sbar2 in [0, sigma_max^2] is an authoritative oracle for the
constrained problems; it is implemented here alongside the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ROLE_NORMALIZED,
    BaselineRiskTable,
    BinDistribution,
    EstimatorHandle,
    NoiseGrid,
    RiskProfile,
    check_distribution,
    normalize,
)
from .exceptions import InfeasibleProblemError, UnnormalizedWeightsError

#: E[log Z^2] for Z ~ N(0,1): the loss of a linear gain is a scaled chi-square
#: with one degree of freedom, so E[log loss] = log(risk) + LOG_CHI2_MEAN.
LOG_CHI2_MEAN = -(np.euler_gamma + np.log(2.0))


@dataclass(frozen=True)
class LinearGaussianModel:
    """Scalar linear-Gaussian signal model; sigma_y is the clean-signal std."""

    sigma_y: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma_y) and self.sigma_y > 0):
            raise ValueError(f"sigma_y must be positive and finite, got {self.sigma_y!r}")

    @property
    def sigma_y_sq(self) -> float:
        return self.sigma_y * self.sigma_y


@dataclass(frozen=True)
class LinearEstimator:
    """The estimator f(x) = a * x."""

    a: float

    def predict(self, x):
        return self.a * np.asarray(x, dtype=float)


def effective_variance(pi: BinDistribution) -> float:
    """sbar2 = sum_i pi_i * sigma_i^2 over the grid representatives."""
    if not pi.is_normalized():
        raise UnnormalizedWeightsError("effective_variance requires a normalized distribution")
    return float(pi.weights @ (pi.grid.representatives ** 2))


def train_closed_form(model: LinearGaussianModel, pi: BinDistribution) -> LinearEstimator:
    """Exact risk minimizer under sampling weights pi."""
    sy2 = model.sigma_y_sq
    return LinearEstimator(sy2 / (sy2 + effective_variance(pi)))


def conditional_risk(model: LinearGaussianModel, est: LinearEstimator, sigma):
    """E[(a x - y)^2 | sigma], expanded from the quadratic loss.

    Vectorized over sigma. Implemented from first principles as
    a^2 (sy^2 + sigma^2) - 2 a sy^2 + sy^2 (see module docstring).
    """
    a = est.a
    sy2 = model.sigma_y_sq
    s2 = np.square(np.asarray(sigma, dtype=float))
    return a * a * (sy2 + s2) - 2.0 * a * sy2 + sy2


def best_individual_gain(model: LinearGaussianModel, sigma):
    """The per-level minimizer a*(sigma) = sy^2 / (sy^2 + sigma^2)."""
    sy2 = model.sigma_y_sq
    s2 = np.square(np.asarray(sigma, dtype=float))
    return sy2 / (sy2 + s2)


def best_individual_risk(model: LinearGaussianModel, sigma):
    """min_a E[(a x - y)^2 | sigma] = sy^2 sigma^2 / (sy^2 + sigma^2).

    This is the per-level lower envelope r(sigma); it saturates at sy^2 as
    sigma grows. Vectorized over sigma.
    """
    sy2 = model.sigma_y_sq
    s2 = np.square(np.asarray(sigma, dtype=float))
    return sy2 * s2 / (sy2 + s2)


def risk_profile(model: LinearGaussianModel, est: LinearEstimator, grid: NoiseGrid) -> RiskProfile:
    """Exact conditional-risk profile of `est` on the grid representatives."""
    return RiskProfile(grid, conditional_risk(model, est, grid.representatives))


def baseline_table(model: LinearGaussianModel, grid: NoiseGrid) -> BaselineRiskTable:
    """BaselineRiskTable of best-individual risks, with exact log-scale
    normalizers L_delta(sigma) = exp(E[log loss at the best individual])."""
    r = best_individual_risk(model, grid.representatives)
    return BaselineRiskTable(grid, r, log_values=r * np.exp(LOG_CHI2_MEAN))


def log_conditional_risk(model: LinearGaussianModel, est: LinearEstimator, sigma):
    """Exact E[log (a x - y)^2 | sigma]: the loss is risk * chi^2_1, so the
    expected log is log(risk) + E[log chi^2_1]."""
    return np.log(conditional_risk(model, est, sigma)) + LOG_CHI2_MEAN


class ClosedFormLinearTrainer:
    """TrainerContract backend that trains and evaluates in closed form.

    Deterministic and noise-free; `seed` is accepted for interface parity
    with stochastic trainers and ignored.
    """

    def __init__(self, model: LinearGaussianModel, grid: NoiseGrid, seed: int = 0):
        self.model = model
        self.grid = grid
        self.seed = seed
        self._round = 0

    def train(self, weights: BinDistribution) -> EstimatorHandle:
        check_distribution(weights, self.grid, name="training weights")
        est = train_closed_form(self.model, normalize(weights))
        handle = EstimatorHandle(self._round, est)
        self._round += 1
        return handle

    def evaluate(self, handle: EstimatorHandle, grid: NoiseGrid) -> RiskProfile:
        return risk_profile(self.model, handle.params, grid)

    def evaluate_log(self, handle: EstimatorHandle, grid: NoiseGrid) -> RiskProfile:
        return RiskProfile(
            grid, log_conditional_risk(self.model, handle.params, grid.representatives)
        )


@dataclass(frozen=True)
class OracleResult:
    """Outcome of a brute-force scan over the effective training variance."""

    sigma_bar_sq: float
    estimator: LinearEstimator
    risk_profile: RiskProfile
    overall_risk: float
    max_gap: float
    epsilon_min: float


def _candidate_grid(sigma_max_sq: float, resolution: float) -> np.ndarray:
    step = resolution * sigma_max_sq
    return np.arange(0.0, sigma_max_sq + step / 2, step)


def _scan(model, grid, p_weights, candidates):
    """Risk matrix machinery shared by both oracle searches.

    Returns (overall risk per candidate, max gap per candidate).
    """
    sy2 = model.sigma_y_sq
    s2 = grid.representatives ** 2
    r = best_individual_risk(model, grid.representatives)
    a = sy2 / (sy2 + candidates)
    risks = a[:, None] ** 2 * (sy2 + s2[None, :]) - 2.0 * a[:, None] * sy2 + sy2
    max_gap = (risks - r[None, :]).max(axis=1)
    overall = risks @ p_weights
    return overall, max_gap


def grid_search_minimax(
    model: LinearGaussianModel, grid: NoiseGrid, resolution: float = 1e-3
) -> OracleResult:
    """Scan sbar2 in [0, sigma_max^2] minimizing the max per-bin gap.

    Resolution is relative to sigma_max^2; the incumbent is refined one decade
    finer. Ties resolve to the smaller sbar2 (first argmin).
    """
    p = BinDistribution.uniform(grid)
    best = None
    candidates = _candidate_grid(grid.sigma_max ** 2, resolution)
    for _ in range(2):
        overall, max_gap = _scan(model, grid, p.weights, candidates)
        k = int(np.argmin(max_gap))
        best = (candidates[k], overall[k], max_gap[k])
        step = resolution * grid.sigma_max ** 2 / 10.0
        lo = max(best[0] - 10 * step, 0.0)
        candidates = np.arange(lo, min(best[0] + 10 * step, grid.sigma_max ** 2) + step / 2, step)
    sbar2, overall_k, gap_k = (float(v) for v in best)
    est = LinearEstimator(model.sigma_y_sq / (model.sigma_y_sq + sbar2))
    return OracleResult(
        sigma_bar_sq=sbar2,
        estimator=est,
        risk_profile=risk_profile(model, est, grid),
        overall_risk=overall_k,
        max_gap=gap_k,
        epsilon_min=gap_k,
    )


def grid_search_constrained(
    model: LinearGaussianModel,
    p: BinDistribution,
    epsilon: float,
    grid: NoiseGrid,
    resolution: float = 1e-3,
) -> OracleResult:
    """Scan sbar2 minimizing the p-weighted overall risk subject to
    max-bin gap <= epsilon.

    Raises InfeasibleProblemError (carrying epsilon_min) when no candidate is
    feasible. epsilon = +inf recovers the unconstrained optimum sbar2 =
    effective_variance(p).
    """
    check_distribution(p, grid, role=ROLE_NORMALIZED, name="test distribution p")
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon!r}")
    eps_min = grid_search_minimax(model, grid, resolution).epsilon_min
    if epsilon < eps_min:
        raise InfeasibleProblemError(
            f"no sbar2 satisfies max gap <= {epsilon} (epsilon_min = {eps_min:.6g})",
            epsilon_min=eps_min,
        )
    best = None
    candidates = _candidate_grid(grid.sigma_max ** 2, resolution)
    for _ in range(2):
        overall, max_gap = _scan(model, grid, p.weights, candidates)
        feasible = max_gap <= epsilon
        masked = np.where(feasible, overall, np.inf)
        k = int(np.argmin(masked))
        if not feasible[k]:
            # Coarse pass can miss a narrow feasible window only if epsilon is
            # right at eps_min; fall back to the minimax argmin neighborhood.
            k = int(np.argmin(max_gap))
        best = (candidates[k], overall[k], max_gap[k])
        step = resolution * grid.sigma_max ** 2 / 10.0
        lo = max(best[0] - 10 * step, 0.0)
        candidates = np.arange(lo, min(best[0] + 10 * step, grid.sigma_max ** 2) + step / 2, step)
    sbar2, overall_k, gap_k = (float(v) for v in best)
    if gap_k > epsilon:
        raise InfeasibleProblemError(
            f"feasible window narrower than oracle resolution at epsilon={epsilon} "
            f"(epsilon_min = {eps_min:.6g}); refine `resolution`",
            epsilon_min=eps_min,
        )
    est = LinearEstimator(model.sigma_y_sq / (model.sigma_y_sq + sbar2))
    return OracleResult(
        sigma_bar_sq=sbar2,
        estimator=est,
        risk_profile=risk_profile(model, est, grid),
        overall_risk=overall_k,
        max_gap=gap_k,
        epsilon_min=eps_min,
    )
