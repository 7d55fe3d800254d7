"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input parameters violate a documented invariant."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class DegenerateInputError(ValueError):
    """Input produces an identically vanishing amplitude."""


class UnsupportedSizeError(ValueError):
    pass


class NonPhysicalStateError(RuntimeError):
    """No Hermitian, positive, unit-trace element could be constructed."""
