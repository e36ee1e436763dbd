"""Exception types raised across the package."""


class DiamondError(Exception):
    """Base class for all package errors."""


class SingularMatrix(DiamondError, ArithmeticError):
    pass


class DimensionMismatch(DiamondError, ValueError):
    pass


class InvalidParams(DiamondError, ValueError):
    pass


class InvalidGraph(DiamondError, ValueError):
    pass


class DegenerateTransmission(DiamondError, ArithmeticError):
    """Raised when a transmission amplitude used as a divisor vanishes."""


class UnstableIntegration(DiamondError, RuntimeError):
    pass


class ParseError(DiamondError, ValueError):
    pass


class ValidationError(DiamondError, ValueError):
    pass


class UnknownFigure(DiamondError, KeyError):
    pass
