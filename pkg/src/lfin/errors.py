"""Exception hierarchy shared across the package.

Every validation failure raises a typed error; callers never receive
partially-built objects.
"""


class LfinError(Exception):
    """Base class for all package errors."""


class ShapeError(LfinError):
    """Array extents do not satisfy an operation's contract."""


class ParameterError(LfinError):
    """A scalar argument (scale, patch size, crop size, ...) is invalid."""


class CoordinateError(LfinError):
    """A view/pixel coordinate is out of range."""


class StateError(LfinError):
    """An operation was called before its prerequisites were established."""


class ConfigError(LfinError):
    """A network/training configuration is inconsistent."""


class FormatError(LfinError):
    """A file does not follow the expected format (bad magic/version/layout)."""


class ChecksumError(FormatError):
    """Stored checksum does not match the file contents."""


class LoadError(LfinError):
    """A scene or weight file could not be loaded."""
