"""Exception hierarchy for freespec."""


class FreeSpecError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(FreeSpecError):
    pass


class InvalidRatioError(FreeSpecError):
    pass


class DegenerateRowError(FreeSpecError):
    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"row {row} has zero variance; cannot standardize")


class InvalidInputError(FreeSpecError):
    pass


class UnreadableInputError(InvalidInputError):
    """A file exists but cannot be parsed."""


class PoleError(FreeSpecError):
    pass


class PrincipalValueError(FreeSpecError):
    pass


class UnsupportedAnalyticError(FreeSpecError):
    pass


class InversionError(FreeSpecError):
    """Newton inversion of a Stieltjes transform did not converge."""

    def __init__(self, message, last=None, residual=None):
        self.last = last
        self.residual = residual
        super().__init__(message)


class MisalignedContourError(FreeSpecError):
    pass


class ScaleRangeError(FreeSpecError):
    def __init__(self, message, nodes=()):
        self.nodes = list(nodes)
        super().__init__(message)


class ConvolutionError(FreeSpecError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class EmptyLibraryError(FreeSpecError):
    pass


class TooManyCombosError(FreeSpecError):
    pass
