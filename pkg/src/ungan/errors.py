"""Exception types shared across the package.

Each class maps to one failure category; callers can catch the base
class ``UnganError`` to handle anything raised by this package.
"""


class UnganError(Exception):
    """Base class for all errors raised by ungan."""


class ConfigurationError(UnganError):
    """Invalid configuration value, dimension list, or plan."""


class ShapeError(UnganError):
    """Array shapes inconsistent with the operation's contract."""


class LabelError(UnganError):
    """Class label outside the valid range."""


class NumericError(UnganError):
    """Non-finite value encountered where finite arithmetic is required."""


class FormatError(UnganError):
    """Malformed, truncated, or version-incompatible file."""


class EvaluationError(UnganError):
    """An evaluation protocol could not produce a score."""


class MissingArtifactError(UnganError):
    """A pipeline stage input file is absent at its expected path."""
