"""Exception types shared across the package."""


class LadderError(Exception):
    """Base class for every error raised by jacobs_ladder."""


class ContractViolation(LadderError, ValueError):
    """A caller broke a documented precondition."""


class InsufficientDataError(LadderError, ValueError):
    """Too few crossings, gaps or points for the requested statistic."""


class InvariantViolation(LadderError, RuntimeError):
    """Data contradicts a structural property of the ladder."""


class RangeError(LadderError, ValueError):
    """A query falls outside the region that was walked or sieved."""


class ParseError(LadderError, ValueError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class IncompatibleCheckpoint(LadderError):
    """A checkpoint cannot be used to resume the requested walk."""
