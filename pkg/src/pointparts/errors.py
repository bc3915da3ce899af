"""Error types shared across the toolkit.

All of them derive from ValueError so callers that do not care about the
distinction can catch one thing; the CLI maps them to exit code 2 with the
offending path or field in the message.
"""


class PointpartsError(ValueError):
    """Base class for all toolkit errors."""


class InvalidInputError(PointpartsError):
    """Malformed data: non-finite coordinates, shape mismatches, bad files."""


class InvalidArgumentError(PointpartsError):
    """A parameter is out of its documented range (k too large, bad enum, ...)."""


class UnrecoverableInputError(InvalidInputError):
    """The input admits no meaningful result (e.g. every point hidden)."""


class ConfigError(PointpartsError):
    """A run configuration references missing files or holds invalid values."""
