"""Exception types shared across the package."""


class TacsyncError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(TacsyncError):
    """Operands disagree in shape, sensor id, or degenerate axis length."""


class InvalidConfigError(TacsyncError):
    """A configuration value violates its documented constraints."""


class InvalidFieldError(TacsyncError):
    """A numeric field contains non-finite or out-of-range values."""


class ProtocolViolationError(TacsyncError):
    """Frame stream violates the acquisition protocol (e.g. duplicate sensor/round)."""


class FramingError(TacsyncError):
    """Byte stream is not a well-formed COBS frame.

    ``offset`` is the byte position at which decoding failed.
    """

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (offset {offset})")
        self.offset = offset


class CrcMismatchError(TacsyncError):
    """Packet checksum did not verify."""


class UnsupportedVersionError(TacsyncError):
    """Packet carries a protocol version this implementation does not speak."""


class PacketLengthError(TacsyncError):
    """Payload exceeds the configured cap or the declared length is inconsistent."""


class TrainingFailureError(TacsyncError):
    """Model training diverged; ``epoch`` names the first bad epoch."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class GraspTimeoutError(TacsyncError):
    """Grasp scenario never crossed the stop threshold within the tick cap."""
