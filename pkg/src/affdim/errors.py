"""Exception hierarchy and process exit codes."""


class AffdimError(Exception):
    """Base class for all library errors."""


class ConfigError(AffdimError):
    """Invalid run configuration; carries the offending field when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class BudgetExceededError(AffdimError):
    """An enumeration or depth request exceeds the configured word budget."""


class SingularityError(AffdimError):
    """A matrix (or matrix product) is numerically singular at working precision."""


class DegreeError(AffdimError):
    """Exterior degree outside the valid range [1, d-1]."""


class ConvergenceError(AffdimError):
    """An iterative eigen/power computation failed to converge within budget."""


class CertificateMismatchError(AffdimError):
    """A buffer certificate does not match the requested parameter."""


class HypothesisViolationError(AffdimError):
    """A theorem hypothesis required by a solver is violated (e.g. beta >= 1)."""


class ScheduleError(AffdimError):
    """A measure-tree schedule is infeasible at the requested depth."""


EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_HYPOTHESIS = 4
