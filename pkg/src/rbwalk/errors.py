"""Exception hierarchy shared by all modules."""


class RBWalkError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(RBWalkError, ValueError):
    """An argument violates a documented precondition."""


class GenerationError(RBWalkError, RuntimeError):
    """Random graph generation gave up (rejection cap exceeded)."""


class StructureError(RBWalkError):
    """The graph lacks a structural property an operation requires."""


class NumericError(RBWalkError, ArithmeticError):
    """An iterative solver failed to converge."""


class InfeasibleError(NumericError):
    """A solver converged to a solution that is not a valid probability system."""


class ExperimentError(RBWalkError):
    """An experiment could not be set up (bad graph, disconnected graph, ...)."""
