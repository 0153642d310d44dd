"""Exception types raised by the solver."""

from __future__ import annotations


class ShockTrackError(Exception):
    """Base class for all solver errors."""


class InadmissibleStateError(ShockTrackError, ValueError):
    """A state left the admissible set (e.g. nonpositive density or pressure)."""

    def __init__(self, message: str, component: str | None = None, index=None):
        super().__init__(message)
        self.component = component
        self.index = index


class InvertedElementError(ShockTrackError, ValueError):
    """An element mapping has a nonpositive Jacobian determinant."""

    def __init__(self, message: str, element: int | None = None):
        super().__init__(message)
        self.element = element


class DegenerateJumpError(ShockTrackError, ValueError):
    """The jump across a tracked face is too small to define a shock speed."""


class UntanglingError(ShockTrackError, RuntimeError):
    """Mesh smoothing could not recover a valid configuration."""

    def __init__(self, message: str, worst_element: int | None = None):
        super().__init__(message)
        self.worst_element = worst_element


class LinearSolveError(ShockTrackError, RuntimeError):
    """A (stage) Jacobian could not be factorized."""


class StepFailureError(ShockTrackError, RuntimeError):
    """The regularized SQP subproblem could not be solved."""


class StageFailureError(ShockTrackError, RuntimeError):
    """A stage optimization problem did not converge."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class TableauError(ShockTrackError, ValueError):
    """Unknown or inconsistent Butcher tableau."""


class SetupError(ShockTrackError, ValueError):
    """Problem setup violates a precondition."""


class ConfigError(ShockTrackError, ValueError):
    """Configuration file could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key
