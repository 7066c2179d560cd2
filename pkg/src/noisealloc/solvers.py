"""Dual-ascent solvers for choosing a training noise-level distribution.

Two problems over a fixed estimator family and noise grid:

* constrained: minimize overall risk under a target distribution p subject to
  a per-level excess-risk cap, sup_i [R_i - r_i] <= epsilon. Solved by dual
  ascent: train under normalize(p + lambda), then raise each multiplier in
  proportion to its constraint violation and clamp at zero.
* minimax gap: minimize sup_i [R_i - r_i] with no target distribution. The
  multipliers live on the probability simplex and are themselves the training
  distribution; the attained value estimates the smallest feasible epsilon.

The constrained solver also supports a log-scale (PSNR-motivated) variant
where the cap is multiplicative, R_i / L_i <= 1 + epsilon, with L_i the
per-level log-risk normalizer; training weights become p_i + lambda_i / L_i.

Solvers only see a trainer through the TrainerContract, so exact closed-form
and noisy SGD backends run through identical code paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    ROLE_MULTIPLIER,
    BaselineRiskTable,
    BinDistribution,
    EstimatorHandle,
    NoiseGrid,
    RiskProfile,
    check_distribution,
    check_same_grid,
    check_trainer,
    gap_profile,
    normalize,
)
from .exceptions import ConfigError

StepSpec = Union[str, float, Sequence[float]]

_SCHEDULES = ("constant", "sqrt-decay")
_NORMALIZATIONS = ("projection", "sum")


@dataclass(frozen=True)
class SolverConfig:
    """Shared settings for both solvers.

    step_size is "auto" (scale picked from the baseline risk), a positive
    scalar, or a per-bin sequence. epsilon applies only to the constrained
    problem; it may be math.inf (the cap is then vacuous). A noise floor of
    four standard errors widens the stopping tolerances automatically when
    the trainer reports risk uncertainty.
    """

    epsilon: Optional[float] = None
    max_rounds: int = 200
    step_size: StepSpec = "auto"
    step_schedule: str = "constant"
    stop_tol: float = 1e-6
    log_scale: bool = False
    p2_normalization: str = "projection"

    def __post_init__(self):
        if self.epsilon is not None:
            e = float(self.epsilon)
            if np.isnan(e) or e < 0:
                raise ConfigError(f"epsilon must be >= 0 or None, got {self.epsilon!r}")
            object.__setattr__(self, "epsilon", e)
        if int(self.max_rounds) != self.max_rounds or self.max_rounds < 1:
            raise ConfigError(f"max_rounds must be a positive integer, got {self.max_rounds!r}")
        object.__setattr__(self, "max_rounds", int(self.max_rounds))
        if not (np.isfinite(self.stop_tol) and self.stop_tol > 0):
            raise ConfigError(f"stop_tol must be positive, got {self.stop_tol!r}")
        if self.step_schedule not in _SCHEDULES:
            raise ConfigError(f"step_schedule must be one of {_SCHEDULES}, got {self.step_schedule!r}")
        if self.p2_normalization not in _NORMALIZATIONS:
            raise ConfigError(
                f"p2_normalization must be one of {_NORMALIZATIONS}, got {self.p2_normalization!r}"
            )
        if isinstance(self.step_size, str):
            if self.step_size != "auto":
                raise ConfigError(f'step_size must be "auto", a scalar, or a sequence, got {self.step_size!r}')
        elif np.isscalar(self.step_size):
            s = float(self.step_size)
            if not (np.isfinite(s) and s > 0):
                raise ConfigError(f"step_size must be positive, got {self.step_size!r}")
            object.__setattr__(self, "step_size", s)
        else:
            steps = tuple(float(s) for s in self.step_size)
            if len(steps) == 0 or not all(np.isfinite(s) and s > 0 for s in steps):
                raise ConfigError("per-bin step sizes must be a nonempty positive sequence")
            object.__setattr__(self, "step_size", steps)


@dataclass(frozen=True)
class DualState:
    """Snapshot of one ascent round, taken before the multiplier update."""

    round_index: int
    multipliers: BinDistribution
    pi: BinDistribution
    risk: RiskProfile
    gap: RiskProfile
    dual_value: float
    max_violation: float
    step_size: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.step_size, dtype=float)
        s.flags.writeable = False
        object.__setattr__(self, "step_size", s)


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a dual-ascent run.

    pi is the training distribution of the final round; max_gap and
    gap_spread summarize the final linear-scale gap profile. epsilon_min
    fields are populated by the minimax solver only (final-iterate value and
    the best value seen across rounds). advisory is None exactly when the
    run converged.
    """

    pi: BinDistribution
    multipliers: BinDistribution
    handle: EstimatorHandle
    history: tuple
    converged: bool
    rounds_used: int
    max_gap: float
    gap_spread: float
    overall_risk: float
    dual_value: float
    duality_gap: float
    epsilon_min: Optional[float] = None
    epsilon_min_best: Optional[float] = None
    advisory: Optional[str] = None

    @property
    def final_state(self) -> DualState:
        return self.history[-1]


def gap_thresholds(baseline: BaselineRiskTable, epsilon: float) -> np.ndarray:
    """Per-bin risk caps r_i + epsilon for the constrained problem."""
    if np.isnan(epsilon) or epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon!r}")
    return baseline.values + epsilon


def multiplier_step_capped(lam: np.ndarray, violation: np.ndarray, alpha) -> np.ndarray:
    """One projected-ascent step for nonnegative multipliers:
    [lam + alpha * violation]_+ elementwise."""
    return np.maximum(np.asarray(lam, dtype=float) + np.asarray(alpha) * violation, 0.0)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort algorithm)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-d array")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = idx[u - css / idx > 0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def multiplier_step_simplex(
    lam: np.ndarray, gaps: np.ndarray, alpha, normalization: str = "sum"
) -> np.ndarray:
    """One ascent step for simplex-constrained multipliers.

    "sum" clips the raw step at zero and renormalizes by the sum, which keeps
    hand-checkable arithmetic but can stall short of the optimum (it preserves
    the direction of lam + alpha * gaps). "projection" is the Euclidean
    simplex projection and is the convergent default inside the solver.
    """
    candidate = np.asarray(lam, dtype=float) + np.asarray(alpha) * np.asarray(gaps, dtype=float)
    if normalization == "projection":
        return project_to_simplex(candidate)
    if normalization != "sum":
        raise ValueError(f"normalization must be one of {_NORMALIZATIONS}, got {normalization!r}")
    clipped = np.maximum(candidate, 0.0)
    total = clipped.sum()
    if total <= 0:
        return np.full(clipped.shape, 1.0 / clipped.size)
    return clipped / total


def log_scale_weights(
    p: BinDistribution, lam: np.ndarray, log_baseline: np.ndarray
) -> BinDistribution:
    """Training weights p_i + lam_i / L_i for the multiplicative-cap variant."""
    L = np.asarray(log_baseline, dtype=float)
    if L.shape != p.weights.shape:
        raise ValueError(f"log_baseline has shape {L.shape}, expected {p.weights.shape}")
    if not np.all(np.isfinite(L) & (L > 0)):
        raise ValueError("log-scale normalizers must be finite and positive")
    return BinDistribution(p.grid, p.weights + np.asarray(lam, dtype=float) / L, role=ROLE_MULTIPLIER)


def dual_value_capped(
    risk: RiskProfile, p: BinDistribution, lam: np.ndarray, thresholds: np.ndarray
) -> float:
    """Lagrangian dual value for the additive cap. The threshold term sums
    only over active multipliers so epsilon = inf contributes 0, not 0*inf."""
    lam = np.asarray(lam, dtype=float)
    active = lam > 0
    value = float((p.weights + lam) @ risk.values)
    if np.any(active):
        value -= float(lam[active] @ thresholds[active])
    return value


def dual_value_capped_log(
    risk: RiskProfile,
    p: BinDistribution,
    lam: np.ndarray,
    log_baseline: np.ndarray,
    epsilon: float,
) -> float:
    """Dual value for the multiplicative cap R_i / L_i <= 1 + epsilon."""
    lam = np.asarray(lam, dtype=float)
    L = np.asarray(log_baseline, dtype=float)
    value = float((p.weights + lam / L) @ risk.values)
    total = float(lam.sum())
    if total > 0:
        value -= (1.0 + epsilon) * total
    return value


def dual_value_minimax(gap: RiskProfile, lam: np.ndarray) -> float:
    """Dual value for the minimax problem: the lam-weighted mean gap."""
    return float(np.asarray(lam, dtype=float) @ gap.values)


def _resolve_steps(
    config: SolverConfig,
    baseline: BaselineRiskTable,
    n: int,
    thresholds: Optional[np.ndarray] = None,
) -> np.ndarray:
    spec = config.step_size
    if isinstance(spec, str):
        if thresholds is not None:
            # Per-bin scale normalization: the multiplicative-cap thresholds
            # span orders of magnitude, so a scalar step either oscillates at
            # the small bins or crawls at the large ones.
            return 0.5 / thresholds
        top = float(baseline.values.max())
        return np.full(n, 0.5 / top if top > 0 else 0.5)
    if isinstance(spec, tuple):
        steps = np.asarray(spec, dtype=float)
        if steps.shape != (n,):
            raise ConfigError(f"per-bin step sizes have length {steps.size}, expected {n}")
        return steps
    return np.full(n, float(spec))


def _schedule_factor(schedule: str, round_index: int) -> float:
    if schedule == "sqrt-decay":
        return 1.0 / np.sqrt(round_index + 1.0)
    return 1.0


def _noise_floor(risk: RiskProfile) -> float:
    if risk.stderr is None:
        return 0.0
    return 4.0 * float(risk.stderr.max())


def _check_baseline(baseline: BaselineRiskTable, grid: NoiseGrid):
    check_same_grid(baseline.grid, grid, "baseline")


def compute_baseline(trainer, grid: Optional[NoiseGrid] = None) -> BaselineRiskTable:
    """Per-level best achievable risk, estimated by training a point mass on
    each bin in turn. Advances the trainer's round counter; use a dedicated
    trainer instance."""
    check_trainer(trainer)
    grid = trainer.grid if grid is None else grid
    values = np.empty(grid.bin_count)
    for i in range(grid.bin_count):
        handle = trainer.train(BinDistribution.point_mass(grid, i))
        profile = trainer.evaluate(handle, grid)
        values[i] = profile.values[i]
    return BaselineRiskTable(grid, values)


def compute_log_baseline(trainer, grid: Optional[NoiseGrid] = None) -> np.ndarray:
    """Per-level log-risk normalizers L_i = exp(E[log loss]) under the best
    single-level estimator, via the trainer's evaluate_log hook."""
    check_trainer(trainer)
    if not hasattr(trainer, "evaluate_log"):
        raise TypeError("trainer does not expose evaluate_log; log-scale runs need one")
    grid = trainer.grid if grid is None else grid
    values = np.empty(grid.bin_count)
    for i in range(grid.bin_count):
        handle = trainer.train(BinDistribution.point_mass(grid, i))
        profile = trainer.evaluate_log(handle, grid)
        values[i] = np.exp(profile.values[i])
    return values


def _finish(
    *,
    pi,
    lam_dist,
    handle,
    history,
    converged,
    overall_risk,
    dual_value,
    duality_gap,
    epsilon_min=None,
    epsilon_min_best=None,
    advisory=None,
) -> SolveResult:
    final = history[-1]
    return SolveResult(
        pi=pi,
        multipliers=lam_dist,
        handle=handle,
        history=tuple(history),
        converged=converged,
        rounds_used=len(history),
        max_gap=final.gap.max(),
        gap_spread=final.gap.max() - final.gap.min(),
        overall_risk=overall_risk,
        dual_value=dual_value,
        duality_gap=duality_gap,
        epsilon_min=epsilon_min,
        epsilon_min_best=epsilon_min_best,
        advisory=advisory,
    )


def solve_constrained(
    trainer,
    baseline: BaselineRiskTable,
    config: SolverConfig,
    p: Optional[BinDistribution] = None,
    log_baseline: Optional[np.ndarray] = None,
) -> SolveResult:
    """Dual ascent for the risk-capped problem.

    Trains under normalize(p + lam) each round (p + lam / L in log-scale
    mode), then takes a positive-part gradient step on the multipliers.
    Convergence requires both a settled multiplier vector and feasibility
    within tolerance; tolerances widen to the trainer's reported noise level.

    Log-scale mode enforces R_i / L_i <= 1 + epsilon. Internally it ascends
    the multiplier of the equivalent scaled constraint R_i <= (1+epsilon) L_i,
    whose ascent direction is well conditioned across bins where L_i spans
    orders of magnitude, and the "auto" step is likewise per-bin,
    0.5 / ((1+epsilon) L_i). The reported multipliers are converted back to
    the ratio form, so pi is proportional to p + lam / L and the KKT points
    coincide with the ratio-form update.

    Does not prove infeasibility: with epsilon below the attainable minimum
    the multipliers grow without bound and the run reports non-convergence
    with an advisory pointing at the minimax solver.
    """
    check_trainer(trainer)
    grid = trainer.grid
    _check_baseline(baseline, grid)
    if config.epsilon is None:
        raise ConfigError("constrained solve requires config.epsilon")
    epsilon = config.epsilon
    if p is None:
        p = BinDistribution.uniform(grid)
    check_distribution(p, grid, role="normalized", name="p")
    if config.log_scale:
        if log_baseline is None:
            log_baseline = baseline.log_values
        if log_baseline is None:
            raise ConfigError("log-scale solve requires log-risk normalizers")
        log_baseline = np.asarray(log_baseline, dtype=float)
        if log_baseline.shape != (grid.bin_count,) or not np.all(
            np.isfinite(log_baseline) & (log_baseline > 0)
        ):
            raise ConfigError("log-risk normalizers must be positive and match the grid")
        if not np.isfinite(epsilon):
            raise ConfigError("log-scale solve requires a finite epsilon")

    if config.log_scale:
        thresholds = (1.0 + epsilon) * log_baseline
        base_steps = _resolve_steps(config, baseline, grid.bin_count, thresholds)
    else:
        thresholds = gap_thresholds(baseline, epsilon)
        base_steps = _resolve_steps(config, baseline, grid.bin_count)
    # lam carries the weight-space multiplier: the constraint multiplier
    # itself in linear mode, lambda / L in log mode.
    lam = np.zeros(grid.bin_count)
    report_scale = log_baseline if config.log_scale else None
    history = []
    converged = False
    handle = None

    for k in range(config.max_rounds):
        steps = base_steps * _schedule_factor(config.step_schedule, k)
        reported = lam * report_scale if report_scale is not None else lam
        lam_dist = BinDistribution(grid, reported, role=ROLE_MULTIPLIER)
        weights = BinDistribution(grid, p.weights + lam, role=ROLE_MULTIPLIER)
        pi = normalize(weights)
        handle = trainer.train(pi)
        risk = trainer.evaluate(handle, grid)
        check_same_grid(risk.grid, grid, "risk profile")
        gap = gap_profile(risk, baseline)
        violation = risk.values - thresholds
        dual_value = dual_value_capped(risk, p, lam, thresholds)
        noise = _noise_floor(risk)
        history.append(
            DualState(
                round_index=k,
                multipliers=lam_dist,
                pi=pi,
                risk=risk,
                gap=gap,
                dual_value=dual_value,
                max_violation=float(violation.max()),
                step_size=steps,
            )
        )
        new_lam = multiplier_step_capped(lam, violation, steps)
        move = float(np.abs(new_lam - lam).max())
        # Movement gate at one standard error, feasibility gate at four:
        # the multipliers must have settled to within the evaluation noise
        # itself before a merely noise-compatible violation can stop the run.
        move_tol = max(config.stop_tol * (1.0 + lam.max()), float(steps.max()) * noise / 4.0)
        feas_tol = max(noise, config.stop_tol)
        lam = new_lam
        if move <= move_tol and float(violation.max()) <= feas_tol:
            converged = True
            break

    final = history[-1]
    overall_risk = float(p.weights @ final.risk.values)
    duality_gap = overall_risk - final.dual_value
    advisory = None
    if not converged:
        advisory = (
            f"no convergence in {config.max_rounds} rounds "
            f"(last max violation {final.max_violation:.4g}). If epsilon is below the "
            "attainable minimum the problem is infeasible; estimate that minimum with "
            "the minimax solver first, otherwise increase max_rounds or lower step_size."
        )
    final_reported = lam * report_scale if report_scale is not None else lam
    return _finish(
        pi=final.pi,
        lam_dist=BinDistribution(grid, final_reported, role=ROLE_MULTIPLIER),
        handle=handle,
        history=history,
        converged=converged,
        overall_risk=overall_risk,
        dual_value=final.dual_value,
        duality_gap=duality_gap,
        advisory=advisory,
    )


def solve_minimax_gap(
    trainer,
    baseline: BaselineRiskTable,
    config: SolverConfig = SolverConfig(),
) -> SolveResult:
    """Projected ascent for the smallest attainable excess-risk cap.

    The multipliers start uniform, are used directly as the training
    distribution, and are stepped along the gap profile, then mapped back to
    the simplex (Euclidean projection by default; "sum" renormalization is
    available but can stall at a multiplier vector merely proportional to the
    gap profile). epsilon_min is the final-iterate max gap; epsilon_min_best
    is the smallest max gap seen over all rounds.
    """
    check_trainer(trainer)
    grid = trainer.grid
    _check_baseline(baseline, grid)
    if config.epsilon is not None:
        raise ConfigError("the minimax solve takes no epsilon; it estimates the minimum")
    if config.log_scale:
        raise ConfigError("log_scale applies to the constrained solve only")
    base_steps = _resolve_steps(config, baseline, grid.bin_count)
    lam = np.full(grid.bin_count, 1.0 / grid.bin_count)
    history = []
    converged = False
    handle = None
    best_primal = np.inf

    for k in range(config.max_rounds):
        steps = base_steps * _schedule_factor(config.step_schedule, k)
        lam_dist = BinDistribution(grid, lam, role=ROLE_MULTIPLIER)
        pi = normalize(lam_dist)
        handle = trainer.train(pi)
        risk = trainer.evaluate(handle, grid)
        check_same_grid(risk.grid, grid, "risk profile")
        gap = gap_profile(risk, baseline)
        dual_value = dual_value_minimax(gap, lam)
        noise = _noise_floor(risk)
        primal = gap.max()
        best_primal = min(best_primal, primal)
        history.append(
            DualState(
                round_index=k,
                multipliers=lam_dist,
                pi=pi,
                risk=risk,
                gap=gap,
                dual_value=dual_value,
                max_violation=primal,
                step_size=steps,
            )
        )
        new_lam = multiplier_step_simplex(lam, gap.values, steps, config.p2_normalization)
        move = float(np.abs(new_lam - lam).max())
        move_tol = max(config.stop_tol * (1.0 + lam.max()), float(steps.max()) * noise / 4.0)
        lam = new_lam
        if move <= move_tol:
            converged = True
            break

    final = history[-1]
    overall_risk = float(final.pi.weights @ final.risk.values)
    duality_gap = final.gap.max() - final.dual_value
    advisory = None
    if not converged:
        advisory = (
            f"no convergence in {config.max_rounds} rounds; the multiplier vector is "
            "still moving. Increase max_rounds, lower step_size, or use the "
            '"projection" normalization if "sum" was selected.'
        )
    return _finish(
        pi=final.pi,
        lam_dist=BinDistribution(grid, lam, role=ROLE_MULTIPLIER),
        handle=handle,
        history=history,
        converged=converged,
        overall_risk=overall_risk,
        dual_value=final.dual_value,
        duality_gap=duality_gap,
        epsilon_min=final.gap.max(),
        epsilon_min_best=float(best_primal),
        advisory=advisory,
    )
