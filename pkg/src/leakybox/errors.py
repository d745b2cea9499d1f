"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called outside its numerical domain."""


class TruncationError(PreconditionError):
    """Probability mass beyond the truncated number basis is too large."""


class StepWindowError(PreconditionError):
    """No admissible time step exists for the requested parameters."""


class ConfigError(ValueError):
    """A run configuration failed to parse or validate.

    ``path`` names the offending field as ``section.key`` and ``line`` is the
    1-based line in the source file when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = path
            if line is not None:
                where += f" (line {line})"
            where += ": "
        super().__init__(where + message)
