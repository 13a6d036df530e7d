# modules/errors.py
# Exception types raised by the funkvol library, grouped by pipeline stage

from typing import Any, Optional


class FunkVolError(Exception):
    """Base error; `stage` names the pipeline step that failed"""

    stage = "internal"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class ParseError(FunkVolError):
    """Input file or run configuration could not be read"""

    stage = "parse"


class GeometryError(FunkVolError):
    stage = "geometry"


class DegenerateInput(GeometryError):
    """Points do not span a full-dimensional polytope"""


class EmptyInput(GeometryError):
    pass


class PointNotInterior(GeometryError):
    pass


class OriginNotInterior(GeometryError):
    pass


class MapsThroughInfinity(GeometryError):
    """A collineation sends part of the polytope to the hyperplane at infinity"""


class NonpositiveRadius(GeometryError):
    pass


class NotStrictlyContained(GeometryError):
    pass


class DegeneratePairing(GeometryError):
    """A dual-vertex / vertex pairing 1 - <q, v> is not strictly positive"""


class NotCentrallySymmetric(GeometryError):
    pass


class WrongFlagCount(GeometryError):
    pass


class DimensionTooLarge(GeometryError):
    pass


class QuadratureError(FunkVolError):
    stage = "quadrature"


class ToleranceNotReached(QuadratureError):
    """Evaluation budget exhausted; `estimate` holds the best value found"""

    def __init__(self, message: str, estimate: Optional[Any] = None):
        super().__init__(message)
        self.estimate = estimate


class OptimizationError(FunkVolError):
    stage = "optimization"


class MaxIterations(OptimizationError):
    """Iteration budget exhausted; `last` holds the final iterate"""

    def __init__(self, message: str, last: Optional[Any] = None):
        super().__init__(message)
        self.last = last
