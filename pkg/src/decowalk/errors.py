"""Exception types shared across the package.

The CLI maps these onto process exit codes (see ``decowalk.cli``).
"""


class DecowalkError(Exception):
    """Base class for all package errors."""


class DomainError(DecowalkError, ValueError):
    """Operands or parameters outside the mathematical domain of an operation."""


class CapabilityError(DecowalkError, NotImplementedError):
    """The requested construction is not available for this group family."""


class ResourceLimitError(DecowalkError, RuntimeError):
    """A configured size cap (enumeration, state space) would be exceeded."""


class ConvergenceError(DecowalkError, RuntimeError):
    """An iterative method stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
