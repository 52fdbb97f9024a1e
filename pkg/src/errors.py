"""Exception hierarchy shared by the library and the command-line front end."""

from __future__ import annotations

from typing import Optional


class RwgabpError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(RwgabpError, ValueError):
    """A quadratic model or its input data is invalid."""


class ParseError(ModelError):
    """A model, matrix or vector file could not be parsed."""


class DimensionError(ModelError):
    """Array shapes do not agree."""


class ParameterError(RwgabpError, ValueError):
    """Invalid reweighting parameters, schedule, grid or setting."""


class SingularMatrixError(RwgabpError):
    """The coefficient matrix could not be factorized."""


class CoverError(RwgabpError, ValueError):
    """A cover specification is malformed."""


class ConvergenceError(RwgabpError):
    """An inner numerical iteration did not reach its tolerance."""

    def __init__(self, message: str, best_estimate: Optional[float] = None):
        super().__init__(message)
        self.best_estimate = best_estimate
