"""Exception classes shared across the solvers."""

from subdiffusion.special_functions import DomainError

__all__ = [
    "AccuracyError",
    "CoverageError",
    "DomainError",
    "NoSolutionError",
    "PreconditionError",
]


class PreconditionError(ValueError):
    """An operation was called with inputs violating its precondition."""


class CoverageError(ValueError):
    """A sampled time profile does not cover the requested interval."""


class AccuracyError(RuntimeError):
    """A numerical procedure failed to reach its requested accuracy."""


class NoSolutionError(RuntimeError):
    """The inverse problem has no solution for the given data.

    Attributes
    ----------
    report : SolvabilityReport
        Per-mode residuals; ``report.violations`` lists the offending modes.
    """

    def __init__(self, report, message: str | None = None):
        self.report = report
        if message is None:
            modes = ", ".join(str(m) for m in report.violations)
            message = f"orthogonality condition violated on null modes: {modes}"
        super().__init__(message)
