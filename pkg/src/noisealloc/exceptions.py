"""Exception types shared across the package."""


class NoiseAllocError(Exception):
    """Base class for all package-specific errors."""


class GridRangeError(NoiseAllocError, ValueError):
    """Invalid noise-range or bin-count arguments to a grid constructor."""


class GridMismatchError(NoiseAllocError, ValueError):
    """Two objects that must share a NoiseGrid were built on different grids."""


class DegenerateDistributionError(NoiseAllocError, ValueError):
    """All weights are zero; no distribution can be formed."""


class UnnormalizedWeightsError(NoiseAllocError, ValueError):
    """An operation requiring a normalized distribution received raw weights."""


class InfeasibleProblemError(NoiseAllocError, ValueError):
    """No candidate satisfies the gap constraint; epsilon is below epsilon_min.

    Attributes
    ----------
    epsilon_min : float
        The smallest feasible gap cap found for the instance.
    """

    def __init__(self, message: str, epsilon_min: float):
        super().__init__(message)
        self.epsilon_min = epsilon_min


class DivergenceError(NoiseAllocError, RuntimeError):
    """Iterative training diverged (step size too large)."""


class ConfigError(NoiseAllocError, ValueError):
    """Experiment configuration is missing, malformed, or inconsistent."""
