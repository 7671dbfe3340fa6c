"""Exception types shared across the package."""


class DfsGateError(Exception):
    """Base class for all package errors."""


class NumericalError(DfsGateError):
    """A numerical procedure failed (non-convergence, overflow, singular input)."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class CalibrationError(NumericalError):
    """Raised when a calibration has no solution, e.g. the driving force vanishes."""


class ResonanceError(NumericalError):
    """Raised when a mode is driven exactly on resonance (zero detuning)."""


class FockOverflowError(NumericalError):
    def __init__(self, message: str, population: float):
        super().__init__(f"{message} (edge population={population:.3e})")
        self.population = population


class ConfigError(DfsGateError):
    """Invalid or inconsistent experiment configuration."""
