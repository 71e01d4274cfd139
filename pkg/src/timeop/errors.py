"""Exception hierarchy shared by the computation modules.

Each error carries an ``exit_code`` used by the command line front end:
2 for bad input or domain violations, 3 for numerical convergence problems.
"""


class TimeOpError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class DomainError(TimeOpError, ValueError):
    """An argument lies outside the domain of the operation."""


class CoverageError(TimeOpError, ValueError):
    """A grid does not cover enough of a packet's support."""


class ShapeError(TimeOpError, ValueError):
    """Grids or arrays have inconsistent shapes."""


class KindError(TimeOpError, TypeError):
    """An object of the wrong kind was supplied (e.g. massive vs photon)."""


class EmptyFluxError(TimeOpError, ValueError):
    """The directed flux integral at a probe vanishes."""


class NoCycleError(TimeOpError, ValueError):
    """Level spacings are not commensurate, so no recurrence period exists."""


class PacketError(TimeOpError, ValueError):
    """A momentum-space packet is not normalized or does not decay at the grid edge."""


class NoResonanceError(TimeOpError, ValueError):
    """No root of the resonance condition was found in the search bracket."""


class DegenerateCouplingError(TimeOpError, ValueError):
    """The coupling of the exploring state to the continuum vanishes."""


class DivisionGuardError(TimeOpError, ValueError):
    """A quantity used as a divisor fell below its safety floor."""


class SolvabilityError(TimeOpError, ValueError):
    """A linear boundary-value problem is singular for the given source."""


class ConvergenceError(TimeOpError, RuntimeError):
    """An iterative procedure failed to converge."""

    exit_code = 3

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class NormalizationError(TimeOpError, ValueError):
    """A field that must be normalized has zero norm."""
