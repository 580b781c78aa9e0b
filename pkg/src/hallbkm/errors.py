"""Exception types raised across the package."""


class UsageError(ValueError):
    """An operation was called with arguments outside its contract."""


class ValidationError(ValueError):
    """Input data violates a structural invariant (symmetry, divergence)."""


class ConfigError(ValueError):
    """Invalid configuration text; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class CheckpointFormatError(ValueError):
    """A checkpoint file is malformed, truncated or of a foreign format."""


class BlowUpError(FloatingPointError):
    """A time step produced non-finite values."""

    def __init__(self, t, message="non-finite values in state"):
        self.t = t
        super().__init__(f"{message} at t={t!r}")
