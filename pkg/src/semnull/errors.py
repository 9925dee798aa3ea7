"""Exception types shared across the package.

Binary-format readers raise :class:`FormatError` subclasses so callers can
tell the failure modes apart without parsing messages.
"""


class FormatError(ValueError):
    """Base class for malformed binary container data."""


class BadMagicError(FormatError):
    """The stream does not start with the expected magic bytes."""


class UnsupportedVersionError(FormatError):
    """The container declares a format version this reader does not know."""


class TruncatedError(FormatError):
    """The stream ended before the declared content was complete."""


class DuplicateIdError(FormatError):
    """Two records in one container share an identifier."""


class NonFiniteError(FormatError):
    """A stored vector contains NaN or infinity."""
