"""Exception types used across the package."""


class SuspoptError(Exception):
    """Base class for all errors raised by this package."""


class CurveError(SuspoptError):
    """Invalid characteristic curve definition or evaluation input."""


class FitError(SuspoptError):
    """Damper curve fit did not converge.

    Carries the best iterate found so callers can inspect or reuse it.
    """

    def __init__(self, message, best=None, residual_rms=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual_rms = residual_rms
        self.iterations = iterations


class EquilibriumError(SuspoptError):
    """No static operating deflection exists within the search limits."""


class DivergenceError(SuspoptError):
    """Integration produced a non-finite state."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class OptimizationError(SuspoptError):
    """Minimization could not start or produced no usable point."""


class ConfigError(SuspoptError):
    """Invalid run configuration or inconsistent inputs."""


class ComparisonError(SuspoptError):
    """Two runs are not comparable."""
