"""Exception hierarchy shared by all oddaxis modules."""


class OddAxisError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(OddAxisError, ValueError):
    pass


class ParameterError(OddAxisError, ValueError):
    pass


class NoNullVectorError(OddAxisError):
    """The smallest singular value exceeds the requested tolerance."""

    def __init__(self, sigma_min, tol):
        super().__init__(f"smallest singular value {sigma_min:.3e} exceeds tol {tol:.3e}")
        self.sigma_min = sigma_min
        self.tol = tol


class DegenerateMapError(OddAxisError):
    """A map that should be sphere-valued came within 1e-9 of the origin."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class UndersampledMapError(OddAxisError):
    pass


class NonConvergentDegreeError(OddAxisError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IrregularValueError(OddAxisError):
    pass


class SearchFailureError(OddAxisError):
    """Raised when a singular-combination search ends above tolerance.

    ``witness`` and ``sigma_min`` carry the best point found so the caller
    can inspect it.
    """

    def __init__(self, message, witness=None, sigma_min=None):
        super().__init__(message)
        self.witness = witness
        self.sigma_min = sigma_min
