"""Exception hierarchy shared by the numerical modules and the CLI."""


class StarkFloqError(Exception):
    """Base class for every error raised by starkfloq."""


class DomainError(StarkFloqError, ValueError):
    """Argument outside the mathematical domain (e.g. non-finite input)."""


class RangeError(StarkFloqError, ValueError):
    """Argument outside the documented supported range."""


class WindowError(StarkFloqError, ValueError):
    """A state or eigenvector does not fit inside the retained site window."""


class LeakError(StarkFloqError, RuntimeError):
    """Probability reached the window edges beyond the allowed threshold."""

    def __init__(self, message, fraction=None):
        super().__init__(message)
        self.fraction = fraction


class ConvergenceError(StarkFloqError, RuntimeError):
    """An iterative method failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class FitError(StarkFloqError, ValueError):
    """Degenerate profile or too few samples for a fit."""


class ConfigError(StarkFloqError, ValueError):
    """Invalid CLI configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
