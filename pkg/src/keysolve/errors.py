"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`KeysolveError`, and most also derive from :class:`ValueError` so
callers that only care about "bad input" can catch that.
"""


class KeysolveError(Exception):
    """Base class for all package errors."""


class SolverError(KeysolveError, ValueError):
    """A closed-form solve could not produce a transform.

    ``subject`` is set by the groupwise driver to the index of the subject
    whose solve failed; it is ``None`` for pairwise solves.
    """

    subject: int | None = None


class MismatchedLengths(SolverError):
    pass


class InvalidWeights(SolverError):
    pass


class DegenerateConfiguration(SolverError):
    pass


class SingularSystem(SolverError):
    pass


class AllZeroMap(KeysolveError, ValueError):
    pass


class InterpolationMismatch(KeysolveError, ValueError):
    pass


class DimMismatch(KeysolveError, ValueError):
    pass


class EmptyLabel(KeysolveError, ValueError):
    pass


class InfeasibleSpec(KeysolveError, ValueError):
    pass
