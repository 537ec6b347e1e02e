"""Exception types raised by the shape estimation services.

Each class carries the process exit code the management commands use when the
error escapes a command.
"""


class ShapeSenseError(Exception):
    """Base class for estimation failures"""
    exit_code = 1


class ConfigurationError(ShapeSenseError, ValueError):
    """Invalid experiment/simulation configuration or input file"""
    exit_code = 2


class InvalidPolygonError(ConfigurationError):
    """Polygon fails closure, simplicity or orientation checks"""


class NoDetectionError(ShapeSenseError):
    """No sensor ever detected the target (m_t = 0 or n_r = 0)"""
    exit_code = 3


class DegenerateEstimateError(ShapeSenseError):
    """Estimation finished without a usable edge estimate"""
    exit_code = 4


class InvalidSpeedError(ShapeSenseError, ValueError):
    """Speed estimate is not strictly positive"""
    exit_code = 4


class InvalidExpectationError(ShapeSenseError, ValueError):
    """Expected detection count is not strictly positive"""
    exit_code = 4


class InvalidCaseError(ShapeSenseError, ValueError):
    """Edge directions outside the concave-vertex precondition"""
    exit_code = 4


class ConvexVertexError(InvalidCaseError):
    """The vertex is convex; the plain expectation applies instead"""
