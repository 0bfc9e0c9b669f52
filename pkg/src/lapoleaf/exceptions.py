"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad user input: malformed files, out-of-range parameters, shape mismatches."""


class InvariantViolation(RuntimeError):
    """An internal consistency guarantee was broken; indicates a pipeline misuse or bug."""
