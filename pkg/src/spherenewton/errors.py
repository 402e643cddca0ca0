"""Exception types raised by the library."""


class SphereNewtonError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(SphereNewtonError, ValueError):
    pass


class NotOnSphere(SphereNewtonError, ValueError):
    pass


class AntipodalPoints(SphereNewtonError, ValueError):
    """log/transport requested between (nearly) antipodal points."""


class DegenerateMatrix(SphereNewtonError):
    """The instance generator could not produce a nonsingular matrix."""


class SingularClarkeElement(SphereNewtonError):
    """The tangent-reduced Newton system is not acceptably solvable."""


class ZeroDirection(SphereNewtonError):
    """The chosen search direction vanished (stationary point of the merit)."""


class LineSearchStall(SphereNewtonError):
    """Backtracking exhausted ``max_backtracks`` without acceptance."""


class InstanceFormatError(SphereNewtonError, ValueError):
    """An instance file could not be parsed or is structurally invalid."""
