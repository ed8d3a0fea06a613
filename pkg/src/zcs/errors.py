"""Exception hierarchy shared across the package.

Precondition failures map to CLI exit code 2, numerical failures to 3.
"""


class ZcsError(Exception):
    """Base class for all package errors."""


class PreconditionError(ZcsError):
    """Invalid input: bad parameters, geometry, or file contents."""


class ParameterError(PreconditionError):
    pass


class GeometryError(PreconditionError):
    pass


class DomainError(PreconditionError):
    """Query point outside the grid bounding box."""


class SupportViolationError(ParameterError):
    """Phantom fails to vanish at the domain boundary."""


class GridMismatchError(PreconditionError):
    """Two grids that must agree do not."""


class IntegrityError(PreconditionError):
    """Bundle contents disagree with the manifest hashes."""


class NumericalError(ZcsError):
    """A computation failed to converge or resolve."""


class ConvergenceError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass


class BoundaryProximityError(NumericalError):
    """A zero lies too close to the counting contour."""


class ResolutionError(NumericalError):
    """Contour refinement exhausted without resolving the winding."""


class AmbiguityError(NumericalError):
    """Independent travel-time estimators disagree beyond tolerance."""
