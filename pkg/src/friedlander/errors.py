"""Exception types shared across the package."""


class FriedlanderError(Exception):
    """Numerical failure; the CLI maps it to exit status 1."""


class DomainError(FriedlanderError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class ConvergenceError(FriedlanderError):
    """Iterative solver failed; ``diagnostics`` carries the last state."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class TableExhaustedError(FriedlanderError):
    """A finite table cannot answer the query (not a numerical zero)."""


class SamplingError(FriedlanderError, ValueError):
    """Time grid too coarse for the requested frequency cutoff."""
