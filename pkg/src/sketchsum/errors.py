"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config problems (including sketch
compatibility) are distinct from data/format problems, which are distinct
from plain usage mistakes.
"""


class SketchSumError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SketchSumError, ValueError):
    """Invalid configuration value or cross-field constraint violation."""


class IncompatibleSketchError(ConfigError):
    """Two sketches cannot be merged: rows, cols and seed must all match."""


class CounterOverflowError(SketchSumError, OverflowError):
    """The signed 64-bit counter budget would be exceeded."""


class FormatError(SketchSumError, ValueError):
    """Malformed serialized payload or file."""


class BadMagicError(FormatError):
    """Payload does not start with the expected magic bytes."""


class VersionMismatchError(FormatError):
    """Payload carries an unsupported format version."""


class TruncatedPayloadError(FormatError):
    """Payload ends before the declared content does."""


class DataQualityError(SketchSumError, ValueError):
    """Input data violates a precondition (non-finite values, bad cells).

    Carries optional context so distributed workers can name the exact
    offending location.
    """

    def __init__(self, message: str, *, shard: int | None = None, row: int | None = None):
        where = []
        if shard is not None:
            where.append(f"shard {shard}")
        if row is not None:
            where.append(f"row {row}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.shard = shard
        self.row = row


class DegenerateAxisError(DataQualityError):
    """An axis has zero extent, so no grid can be fitted over it."""

    def __init__(self, axis: int):
        super().__init__(f"degenerate axis {axis}: min equals max, cannot fit bounds")
        self.axis = axis


class DomainError(SketchSumError, ValueError):
    """An argument is outside the documented domain of an operation."""
