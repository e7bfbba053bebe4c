"""Exception hierarchy shared across the package."""


class MetricNetError(Exception):
    """Base class for all domain errors raised by metricnet."""


class GraphFileError(MetricNetError):
    """The graph document could not be parsed or has an invalid schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphValidationError(MetricNetError):
    """A graph description violates the network assumptions.

    ``element`` names the offending vertex or edge.
    """

    def __init__(self, message: str, element=None):
        self.element = element
        super().__init__(message)


class Disconnected(GraphValidationError):
    pass


class LoopEdge(GraphValidationError):
    pass


class ParallelEdge(GraphValidationError):
    pass


class DegreeBelowTwo(GraphValidationError):
    pass


class NonpositiveWeight(GraphValidationError):
    pass


class SingularLambda(MetricNetError):
    """lambda lies on (or numerically next to) c_j * l^2 * pi^2."""


class ScanResolutionTooCoarse(MetricNetError):
    pass


class KernelMismatch(MetricNetError):
    pass


class NotUnitSpeed(MetricNetError):
    pass


class NotRegular(MetricNetError):
    pass


class EigSolverFailure(MetricNetError):
    pass


class SingularStep(MetricNetError):
    pass


class BasisTooSmall(MetricNetError):
    pass


class DegenerateSeries(MetricNetError):
    pass
