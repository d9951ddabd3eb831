"""
errors.py - Exception hierarchy for christoffel-osp

Every module raises a subclass of OSPError so that the CLI and the HTTP
service can turn failures into machine-readable payloads with stable exit
codes.
"""

from typing import Any, Dict


class OSPError(Exception):
    """Base exception for all sensor-placement and reconstruction errors."""

    exit_code = 1

    def to_payload(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class SelectionError(OSPError):
    """Raised when a sensor selection does not fit the field it is applied to."""
    exit_code = 6


class InvalidRequestError(OSPError):
    """Raised for out-of-range budgets, counts or parameters."""
    exit_code = 6


class DegenerateDataError(OSPError):
    """Raised when the data carries no usable variation (all secants vanish)."""
    exit_code = 7


class DegenerateEnsembleError(DegenerateDataError):
    """Raised when every pair of ensemble estimates coincides."""
    pass


class DegenerateScoreError(DegenerateDataError):
    """Raised when a score vector is identically zero."""
    pass


class SnapshotFormatError(OSPError):
    """Base class for CSNAP1 / CSV decoding errors."""
    exit_code = 6


class BadMagicError(SnapshotFormatError):
    """File does not start with the CSNAP1 magic."""
    pass


class DimensionMismatchError(SnapshotFormatError):
    """Header fields disagree with each other or with the payload shape."""
    pass


class TruncatedPayloadError(SnapshotFormatError):
    """Payload is shorter or longer than the header announces."""
    pass


class UnknownStrategyError(OSPError):
    """Raised when a placement strategy name is not recognised."""
    exit_code = 5


class ConfigError(OSPError):
    """Raised for malformed or inconsistent configuration files."""
    exit_code = 3


class MissingFileError(OSPError):
    """Raised when an input file does not exist."""
    exit_code = 4
