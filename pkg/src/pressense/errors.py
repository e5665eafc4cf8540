"""Exception types shared across the package."""

from __future__ import annotations


class SingularConfigurationError(ValueError):
    """Raised when point correspondences are degenerate (e.g. collinear) or a
    homography is numerically non-invertible."""


class TrainingDivergedError(RuntimeError):
    """Raised when a training step produces a non-finite loss."""


class RecordParseError(ValueError):
    """Raised when a record file cannot be parsed; names the offending line."""

    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


class RecordVersionError(RecordParseError):
    """Raised when a record carries an unsupported schema version."""


class SessionError(RuntimeError):
    """Raised when a session is fed inconsistent frames (e.g. changed dimensions)."""


class IncompleteSessionError(ValueError):
    """Raised when typing is scored on a session with no terminating Enter press."""


class ProtocolError(ValueError):
    """Raised when a service client violates the message protocol."""
