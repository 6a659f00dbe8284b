"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class BlastSimError(Exception):
    """Base class for all errors raised by blastsim."""


class DomainError(BlastSimError, ValueError):
    """An input lies outside its physical domain (e.g. a non-positive mass)."""


class ZRangeError(BlastSimError, ValueError):
    """Scaled distance outside the validity window of the empirical fits."""

    def __init__(self, z: float, lower: float, upper: float):
        self.z = z
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"scaled distance Z={z:.6g} m/kg^(1/3) outside fit validity window "
            f"[{lower:.6g}, {upper:.6g}]"
        )


class NoDecaySolutionError(BlastSimError, ValueError):
    """No Friedlander decay coefficient reproduces the requested impulse."""


class InfeasibleScalingError(BlastSimError, ValueError):
    """The scaled-distance factor cannot be found inside the fit window."""

    def __init__(self, message: str, achievable: tuple[float, float] | None = None):
        self.achievable = achievable
        super().__init__(message)


class IntegrationError(BlastSimError, RuntimeError):
    """The ODE integrator failed; ``history`` holds the partial response."""

    def __init__(self, message: str, state=None, history=None):
        self.state = state
        self.history = history
        super().__init__(message)


class BracketError(BlastSimError, ValueError):
    """The critical-charge bracket does not straddle the overturn threshold."""


class NonMonotoneOutcomeError(BracketError):
    """Overturning is not monotone in the charge over the search bracket."""

    def __init__(self, message: str, sub_brackets: list[tuple[float, float]]):
        self.sub_brackets = sub_brackets
        super().__init__(message)


class ConfigError(BlastSimError, ValueError):
    """Invalid scenario configuration."""
