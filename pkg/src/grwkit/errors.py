"""Exception types raised by grwkit."""


class GeometryError(Exception):
    """Base class for all grwkit errors."""


class IndexRangeError(GeometryError, ValueError):
    """An order index (k, j, ...) lies outside its admissible range."""


class ContractError(GeometryError, ValueError):
    """Arguments violate an operation's precondition."""


class NumericError(GeometryError, ArithmeticError):
    """A numerical kernel (eigensolver, factorisation) failed."""


class DegenerateMetricError(GeometryError):
    """The induced metric fails to be Riemannian (surface not spacelike)."""

    def __init__(self, message, point=None, margin=None):
        super().__init__(message)
        self.point = point
        self.margin = margin


class UnsupportedError(GeometryError):
    """Requested combination of fiber, warping or formula is not supported."""


class ScenarioError(GeometryError):
    """Malformed scenario description."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column
