"""Exception hierarchy shared across the package."""


class EigenratioError(Exception):
    pass


class GraphError(EigenratioError, ValueError):
    pass


class DisconnectedGraph(GraphError):
    pass


class NonpositiveMeasure(GraphError):
    pass


class MeasureNormalizationError(NonpositiveMeasure):
    """Vertex masses do not sum to one, even after tolerant renormalization."""


class NegativeWeight(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class ZeroFunction(EigenratioError, ValueError):
    pass


class EmptySet(EigenratioError, ValueError):
    pass


class ConvergenceFailure(EigenratioError, RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class KTooLarge(EigenratioError, ValueError):
    pass


class NotAnEigenfunction(EigenratioError, ValueError):
    pass


class OneSidedFunction(EigenratioError, ValueError):
    pass


class BadResolution(EigenratioError, ValueError):
    pass


class TooLarge(EigenratioError, ValueError):
    pass


class EnumerationOverflow(EigenratioError, RuntimeError):
    pass


class NegativeInput(EigenratioError, ValueError):
    pass


class DegenerateFunction(EigenratioError, ValueError):
    pass


class NotDisjoint(EigenratioError, ValueError):
    pass


class TooLargeForExact(EigenratioError, ValueError):
    pass


class H1NotExact(EigenratioError, ValueError):
    pass


class BadKappa(EigenratioError, ValueError):
    pass


class NoEdgeLengths(EigenratioError, ValueError):
    pass


class DegenerateSpectrum(EigenratioError, ValueError):
    pass


class ConfigError(EigenratioError, ValueError):
    pass
