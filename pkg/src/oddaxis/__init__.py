"""Odd-dimensional axis finding, sphere-map degrees and line-bundle obstructions."""
__version__ = "0.1.0"

from .errors import (DegenerateMapError, DimensionError, IrregularValueError,
                     NoNullVectorError, NonConvergentDegreeError, OddAxisError, ParameterError,
                     SearchFailureError, UndersampledMapError)

__all__ = [
    "DegenerateMapError", "DimensionError", "IrregularValueError", "NoNullVectorError",
    "NonConvergentDegreeError", "OddAxisError", "ParameterError", "SearchFailureError",
    "UndersampledMapError", "__version__",
]
