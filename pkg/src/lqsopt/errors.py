class ValidationError(ValueError):
    """Input failed a structural check (shapes, ranges, schema)."""


class NumericalError(RuntimeError):
    """An inner LP solve did not reach optimality."""
