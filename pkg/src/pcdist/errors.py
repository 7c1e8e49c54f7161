"""Exception types shared across the package."""


class PointCloudError(Exception):
    """Base class for all library errors."""


class EmptyCloudError(PointCloudError):
    """A point cloud with zero points was supplied."""


class NonFiniteError(PointCloudError):
    """Coordinates or attributes contain NaN or infinity."""


class InvalidCountError(PointCloudError):
    """A requested count is outside the valid range."""


class CardinalityMismatchError(PointCloudError):
    """The operation requires point sets of equal size."""


class SizeLimitExceededError(PointCloudError):
    """The instance is too large for the exact solver guard."""


class ShapeMismatchError(PointCloudError):
    """A per-point attribute array does not align with its cloud."""


class InsufficientPointsError(PointCloudError):
    """Not enough points are available to satisfy the request."""


class CloudParseError(PointCloudError):
    """A cloud file is malformed.

    The offending 1-based line number, when known, is stored in ``line``
    and included in the message.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
