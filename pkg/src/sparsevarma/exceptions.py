"""Exception hierarchy shared by all modules."""


class SparseVarmaError(Exception):
    """Base class for package errors."""


class InvalidInputError(SparseVarmaError, ValueError):
    """Malformed or out-of-contract input."""


class DomainError(SparseVarmaError, ValueError):
    """Input is well formed but outside the model's domain (e.g. non-invertible)."""


class SolverError(SparseVarmaError, RuntimeError):
    """A numerical solver failed; ``diagnostics`` carries what is known."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class InfeasibleError(SparseVarmaError, RuntimeError):
    """Coefficient-matching constraints admit no solution."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(SparseVarmaError, RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DegenerateTestError(SparseVarmaError, ValueError):
    """Test statistic undefined (zero long-run variance)."""


class StudyAbortedError(SparseVarmaError, RuntimeError):
    """Too many replications failed for the study to be meaningful."""

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or {}
