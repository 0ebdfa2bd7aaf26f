"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Invalid argument (empty input, malformed shapes, missing keys)."""


class DomainError(ValueError):
    """Evaluation requested outside a declared domain of validity."""


class CapabilityError(ValueError):
    """Input exceeds what the selected backend can handle."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateError(ValueError):
    """Degenerate input (vanishing denominator or variance)."""
