"""Exception hierarchy shared across the package."""


class NetinverseError(Exception):
    """Base class for all package-specific errors."""


class DataError(NetinverseError):
    """Malformed or inconsistent input data (files, paths, demand tables)."""


class UnreachableError(NetinverseError):
    """No route exists between the requested origin and destination."""


class SolverError(NetinverseError):
    """The LP kernel failed to produce a certified answer."""


class InconsistentObservation(NetinverseError):
    """No admissible pricing of the designated links can rationalize the route.

    Raised by the dual-price inverse problem when the observed route cannot
    be made optimal by any nonnegative price vector on the priced links.
    Callers are expected to skip and log the observation.
    """


class NoUsableObservations(NetinverseError):
    """Every observation in a batch was inconsistent; nothing to learn from."""
