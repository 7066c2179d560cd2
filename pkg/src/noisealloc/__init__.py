"""Training noise-level allocation for one-size-fits-all denoisers.

Pick the distribution of noise levels used to synthesize training samples so
a single estimator either minimizes overall risk under a per-level
excess-risk cap, or minimizes the worst per-level excess risk outright. The
solvers run dual ascent against any backend implementing TrainerContract; a
closed-form linear-Gaussian backend plus brute-force oracles make every
result independently checkable, and an SGD backend exercises the same paths
with noisy training and Monte Carlo risk estimates.
"""

from .core import (
    BaselineRiskTable,
    BinDistribution,
    EstimatorHandle,
    NoiseGrid,
    RiskProfile,
    TrainerContract,
    gap_profile,
    make_grid,
    normalize,
    psnr_from_mse,
)
from .exceptions import (
    ConfigError,
    DegenerateDistributionError,
    DivergenceError,
    GridMismatchError,
    GridRangeError,
    InfeasibleProblemError,
    NoiseAllocError,
    UnnormalizedWeightsError,
)
from .linear import (
    ClosedFormLinearTrainer,
    LinearEstimator,
    LinearGaussianModel,
    baseline_table,
    best_individual_risk,
    conditional_risk,
    effective_variance,
    grid_search_constrained,
    grid_search_minimax,
    train_closed_form,
)
from .empirical import (
    SgdConfig,
    SgdLinearTrainer,
    derive_rng,
    derive_seed,
    mc_conditional_risk,
    mc_log_conditional_risk,
    sample_noise_levels,
    sgd_train_linear,
)
from .solvers import (
    SolveResult,
    SolverConfig,
    compute_baseline,
    compute_log_baseline,
    solve_constrained,
    solve_minimax_gap,
)
from .estimators import ConstrainedRiskMinimizer, MinimaxGapSolver
from .config import ExperimentConfig, load_config
from .runner import RunRecord, emit_report, load_record, run_experiment, run_oracle

__version__ = "0.1.0"

__all__ = [
    "BaselineRiskTable",
    "BinDistribution",
    "ClosedFormLinearTrainer",
    "ConfigError",
    "ConstrainedRiskMinimizer",
    "DegenerateDistributionError",
    "DivergenceError",
    "EstimatorHandle",
    "ExperimentConfig",
    "GridMismatchError",
    "GridRangeError",
    "InfeasibleProblemError",
    "LinearEstimator",
    "LinearGaussianModel",
    "MinimaxGapSolver",
    "NoiseAllocError",
    "NoiseGrid",
    "RiskProfile",
    "RunRecord",
    "SgdConfig",
    "SgdLinearTrainer",
    "SolveResult",
    "SolverConfig",
    "TrainerContract",
    "UnnormalizedWeightsError",
    "baseline_table",
    "best_individual_risk",
    "compute_baseline",
    "compute_log_baseline",
    "conditional_risk",
    "derive_rng",
    "derive_seed",
    "effective_variance",
    "emit_report",
    "gap_profile",
    "grid_search_constrained",
    "grid_search_minimax",
    "load_config",
    "load_record",
    "make_grid",
    "mc_conditional_risk",
    "mc_log_conditional_risk",
    "normalize",
    "psnr_from_mse",
    "run_experiment",
    "run_oracle",
    "sample_noise_levels",
    "sgd_train_linear",
    "solve_constrained",
    "solve_minimax_gap",
    "train_closed_form",
]
