"""
Exception hierarchy for the speech severity estimation pipeline.

Every error raised by the package derives from SeverityEstimationError, so
callers (and the CLI) can catch the whole family with a single clause and map
each branch to an exit code.
"""


class SeverityEstimationError(Exception):
    """
    Base exception for all pipeline errors.

    Attributes:
        message: Error message
        details: Optional additional error details (offending record, path, sizes)

    Example:
        >>> try:
        ...     load_manifest("manifest.json")
        ... except SeverityEstimationError as e:
        ...     print(f"Pipeline error: {e}")
    """

    def __init__(self, message: str, details: str | None = None) -> None:
        """
        Initialize base exception.

        Args:
            message: Error message
            details: Optional additional error details
        """
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        """Return formatted error message."""
        if self.details:
            return f"{self.message}: {self.details}"
        return self.message


class ConfigurationError(SeverityEstimationError):
    """
    Raised when a configuration document cannot be parsed or validated.

    Example:
        >>> raise ConfigurationError("Invalid run config", "unknown field `vqvae.gamma`")
    """

    pass


class DataError(SeverityEstimationError):
    """
    Raised when input data (manifests, matrices, sessions) is unusable.

    Example:
        >>> raise DataError("Empty training fold", "no sessions assigned to 'train'")
    """

    pass


class ManifestParseError(DataError):
    """Raised when a manifest file is not a well-formed manifest document."""

    pass


class ManifestValidationError(DataError):
    """
    Raised when a parsed manifest violates an invariant.

    The details always name the offending record.

    Example:
        >>> raise ManifestValidationError("Severity out of range", "session s01/a: 130")
    """

    pass


class ShapeError(DataError):
    """Raised when array shapes do not agree with what an operation expects."""

    pass


class FormatError(DataError):
    """Base class for binary file format errors (FMAT and checkpoints)."""

    pass


class BadMagicError(FormatError):
    """Raised when a file does not start with the expected magic bytes."""

    pass


class UnsupportedVersionError(FormatError):
    """Raised when a file declares a format version this package cannot read."""

    pass


class UnsupportedDtypeError(FormatError):
    """Raised when a file declares an unknown dtype code."""

    pass


class TruncatedPayloadError(FormatError):
    """
    Raised when a file ends before its declared payload.

    Example:
        >>> raise TruncatedPayloadError("truncated payload", "expected 14688 bytes, got 100")
    """

    pass


class CheckpointError(DataError):
    """Raised when a checkpoint does not match the model it is loaded into."""

    pass


class NumericError(SeverityEstimationError):
    """
    Raised for numerical failures during computation or training.

    Example:
        >>> raise NumericError("Training diverged", "loss became nan at epoch 12")
    """

    pass


class NonFiniteError(NumericError):
    """Raised when a computation produces NaN or infinite values."""

    pass


class MissingGradientError(NumericError):
    """Raised when an optimizer step finds a parameter without a gradient."""

    pass
