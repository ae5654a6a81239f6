"""Exception types raised across the package.

Everything derives from EdfnetError so callers can catch package
failures with a single except clause; the CLI maps these to exit
code 2.
"""


class EdfnetError(Exception):
    """Base class for all package-specific errors."""


# -------- network / topology --------

class RouteRepeatsStation(EdfnetError):
    """A class route visits the same station twice."""


class EmptyStation(EdfnetError):
    """A station is visited by no class."""


class DisconnectedNetwork(EdfnetError):
    """The station graph induced by the routes is not connected."""


class ClassDoesNotVisitStation(EdfnetError):
    """A (class, station) query for a pair that is not on the route."""


class NetworkTooLarge(EdfnetError):
    """Permutation enumeration refused because the network is too big."""


# -------- lead-time distributions --------

class NegativeTail(EdfnetError):
    """An integrated-tail inverse was queried at a negative value."""


# -------- frontier solving --------

class NegativeWorkload(EdfnetError):
    """A frontier inversion was requested for a negative load vector."""


class ZeroIntensity(EdfnetError):
    """A class weight or rate that must be positive is zero."""


class SolverDivergence(EdfnetError):
    """The scalar stage solver failed to bracket or refine a root."""


class NoConsistentRegion(EdfnetError):
    """No closed-form region reproduces the observed queue lengths."""


# -------- simulation --------

class EventCapExceeded(EdfnetError):
    """run_until(predicate) processed more events than allowed."""


# -------- harness --------

class ParseError(EdfnetError):
    """A config or report file could not be parsed; carries location."""


class ValidationError(EdfnetError):
    """A parsed config violates the documented schema."""


class NoSnapshots(EdfnetError):
    """Band computation was asked for with an empty snapshot pool."""


class GridMismatch(EdfnetError):
    """Two profiles were compared on different evaluation grids."""
