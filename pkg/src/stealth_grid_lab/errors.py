"""Exception hierarchy shared by all modules."""


class StealthGridError(Exception):
    """Base class for every error raised by this package."""


class ParseError(StealthGridError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(StealthGridError):
    """The network data is well formed but physically unusable."""


class DomainError(StealthGridError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(StealthGridError):
    """A factorization failed (singular or indefinite matrix)."""


class DegenerateAttackError(StealthGridError):
    """A selected sensor would receive zero attack variance.

    ``round`` is the 1-based greedy round that failed and ``partial`` holds
    the plan built by the rounds before it (``None`` outside the greedy loop).
    """

    def __init__(self, message, round=None, partial=None):
        super().__init__(message)
        self.round = round
        self.partial = partial


class ConfigError(StealthGridError):
    """Invalid experiment configuration."""
