"""Exception hierarchy shared across the package.

CLI exit-code mapping: ConfigurationError -> 2, NumericalError -> 3,
anything else -> 1.
"""


class RadiodiffError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(RadiodiffError, ValueError):
    """Grid dimensions of two objects do not match."""


class ParameterError(RadiodiffError, ValueError):
    """A parameter is out of its documented range or ordering."""


class FormatError(RadiodiffError, ValueError):
    """A file does not conform to its on-disk format.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CapacityError(RadiodiffError, ValueError):
    """A request exceeds available capacity (e.g. more sensors than free cells)."""


class PlacementError(RadiodiffError, ValueError):
    """A geometric placement is invalid (e.g. transmitter inside a building)."""


class GeometryError(RadiodiffError, ValueError):
    """A geometric query leaves the grid."""


class NumericalError(RadiodiffError, RuntimeError):
    """A linear system or optimisation failed numerically."""


class TrainingError(RadiodiffError, RuntimeError):
    """Model training hit a non-recoverable condition (e.g. non-finite loss)."""


class ConfigurationError(RadiodiffError, ValueError):
    """A run configuration is inconsistent or references missing artifacts."""


class TrainingWarning(UserWarning):
    """Training proceeded but the data or result looks degenerate."""
