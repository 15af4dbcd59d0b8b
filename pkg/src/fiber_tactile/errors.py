#!/usr/bin/env python
# encoding: utf-8

from typing import Dict, Optional

EXIT_SUCCESS = 0
EXIT_USAGE = 2
EXIT_CALIBRATION_FAILED = 3
EXIT_IO = 4
EXIT_DOMAIN = 5


class FiberTactileError(Exception):
    """Base class for all pipeline errors"""

    exit_code = EXIT_DOMAIN


class DomainError(FiberTactileError, ValueError):
    """An input lies outside the domain of an operation"""

    exit_code = EXIT_DOMAIN


class InsufficientDataError(DomainError):
    pass


class DegenerateAbscissaError(DomainError):
    pass


class DegenerateChannelError(DomainError):
    pass


class MissingChannelError(DomainError, KeyError):
    def __init__(self, channel_id: int):
        super().__init__(f"Channel {channel_id} is not present")
        self.channel_id = channel_id

    def __str__(self) -> str:
        return f"Channel {self.channel_id} is not present"


class IncomparableProfilesError(DomainError):
    pass


class ExtrapolationError(DomainError):
    pass


class StreamError(DomainError):
    pass


class CalibrationError(FiberTactileError):
    exit_code = EXIT_CALIBRATION_FAILED


class InsufficientSpanError(CalibrationError):
    pass


class CalibrationFailedError(CalibrationError):
    """No channel produced an acceptable linear fit"""

    def __init__(self, r_squared: Dict[int, float], threshold: float):
        self.r_squared = dict(r_squared)
        self.threshold = threshold
        detail = ", ".join(
            f"ch{channel}: r2={value:.4f}"
            for channel, value in sorted(r_squared.items())
        )
        super().__init__(
            f"No channel reached r2 >= {threshold}" + (f" ({detail})" if detail else "")
        )


class PersistenceError(FiberTactileError):
    exit_code = EXIT_IO


class DocumentNotFoundError(PersistenceError):
    pass


class MalformedDocumentError(PersistenceError):
    pass


class SchemaVersionError(PersistenceError):
    def __init__(self, found: Optional[int], expected: int):
        super().__init__(f"Unsupported schema_version {found} (expected {expected})")
        self.found = found
        self.expected = expected


class FrameError(FiberTactileError):
    """Decode-level telemetry failure"""


class NeedMoreBytesError(FrameError):
    pass


class ResyncNeededError(FrameError):
    pass


class CorruptFrameError(FrameError):
    pass
