"""Exception types shared across the package."""


class CascslError(Exception):
    """Base class for all package errors."""


class GridError(CascslError):
    """Invalid grid construction parameters."""


class StencilError(CascslError):
    """A reconstruction stencil cannot be formed (profile too short)."""


class OrderingError(CascslError):
    """Backtracked face positions are not monotone (validity violated)."""


class GeometryError(CascslError):
    """Intermediate-cell geometry could not be constructed."""


class ValidityError(CascslError):
    """The grid-distortion constraint for the cascade scheme is violated."""


class NumericsError(CascslError):
    """Non-finite values or solver failure encountered during a step."""


class ConfigError(CascslError):
    """Invalid run configuration."""
