"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): argument errors,
raised when inputs violate a precondition, and numerical errors, raised when a
computation degenerates or fails to converge.
"""


class InfogeomError(Exception):
    """Base class for all toolkit errors."""


class ArgumentError(InfogeomError, ValueError):
    """Input violates a documented precondition."""


class DomainError(ArgumentError):
    """A coordinate lies outside the surface patch domain."""


class SupportError(ArgumentError):
    """Distributions do not share the support an operation needs."""


class UnsupportedModel(ArgumentError):
    """Model form is outside what the operation handles."""


class NumericalError(InfogeomError, ArithmeticError):
    """A computation degenerated or failed to converge."""


class DegeneracyError(NumericalError):
    """Singular metric, zero normal, or similar degenerate geometry."""


class TrajectoryEscape(NumericalError):
    """A geodesic left the patch domain; ``path`` holds the points so far."""

    def __init__(self, message, path):
        super().__init__(message)
        self.path = path


class DegenerateVariance(NumericalError):
    """Variance estimate is zero (constant data)."""


class ComponentCollapse(NumericalError):
    """A mixture component lost all mass or its variance collapsed.

    ``component`` is the zero-based index; ``state`` is the last good EM state
    when raised from an iterative fit.
    """

    def __init__(self, message, component, state=None):
        super().__init__(message)
        self.component = component
        self.state = state


class IntegrationError(NumericalError):
    """Quadrature failed to reach the requested tolerance."""


class InfeasibleError(NumericalError):
    """Moment targets cannot be realized by the family / support."""


class ConvergenceError(NumericalError):
    """Iterative solver exhausted its budget."""


class SingularFisher(NumericalError):
    """Damped Fisher system could not be solved."""


class DivergenceError(NumericalError):
    """Training loss blew up; ``trace`` holds losses recorded so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace
