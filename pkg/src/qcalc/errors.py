"""Exception types shared across the package."""
from __future__ import annotations


class QcalcError(Exception):
    """Base class for all qcalc errors."""


class BuildError(QcalcError, ValueError):
    """Invalid parameters passed to a builder or an operation."""


class ResourceLimitError(QcalcError):
    """A size or refinement-level cap would be exceeded."""


class FormatError(QcalcError):
    """A serialized document failed structural validation."""

    def __init__(self, source: str, field: str, message: str):
        super().__init__(f"{source}: invalid field '{field}': {message}")
        self.source = source
        self.field = field


class DisconnectedSampleError(QcalcError):
    """Two vertices are not joined by any edge path."""


class PathError(QcalcError):
    """A vertex chain does not form a valid path for the operation."""


class FieldMismatchError(QcalcError):
    """Fields or paths refer to different samples."""


class UndersampledError(QcalcError):
    """Not enough populated scale buckets for a modulus fit."""


class UnderdeterminedNeighborhoodError(QcalcError):
    """Too few neighbors in the requested ball."""


class AlgebraError(QcalcError, ValueError):
    """Dimension mismatch or unsupported dimension in Clifford arithmetic."""
