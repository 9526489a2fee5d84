"""Exception hierarchy shared by every module.

Each class maps onto one failure category of the command-line tool, so the
CLI can translate an exception into its exit code without string matching.
"""


class AggDistError(Exception):
    """Base class for all library errors."""


class DomainError(AggDistError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """A Gamma-function argument hit a pole (non-positive integer)."""


class DivergenceError(AggDistError, ArithmeticError):
    """A requested moment does not exist for the given parameters."""


class NegativeVarianceError(AggDistError, ArithmeticError):
    """A propagated variance came out non-positive."""


class MissingMomentError(AggDistError, KeyError):
    """A moment table lacks an entry needed by the expansion."""


class DegenerateSampleError(AggDistError, ValueError):
    """All samples are equal, so a spread parameter cannot be estimated."""


class FitError(AggDistError):
    """Base class for parameter-estimation failures."""


class InsufficientDataError(FitError):
    """Too few positive samples to fit the Gamma component."""


class ConvergenceError(FitError):
    """An iterative solver did not reach its tolerance."""


class SimulationOverflowError(AggDistError, OverflowError):
    """The forward pass produced values outside the usable range."""


class NonPDCorrelationError(AggDistError, ValueError):
    """The latent correlation matrix is not positive definite."""


class PropagationError(AggDistError):
    """A failure inside the analytic chain, tagged with the layer name."""

    def __init__(self, layer, cause):
        self.layer = layer
        self.cause = cause
        super().__init__(f"{layer} layer: {cause}")


class OptimizerError(AggDistError):
    """A domain error raised during gradient ascent, with the failing iterate."""

    def __init__(self, message, iterate=None):
        self.iterate = iterate
        super().__init__(message)


class ParseError(AggDistError, ValueError):
    """An input file is malformed or incomplete."""


class AlignmentError(AggDistError, ValueError):
    """Predicted and observed records do not pair up."""
