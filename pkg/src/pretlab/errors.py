"""Exception hierarchy.

Every error raised on purpose by the library derives from ``PretlabError`` so the
CLI can map it to an exit code; precondition failures (exit 2) are the
``PreconditionError`` branch.
"""


class PretlabError(Exception):
    pass


class PreconditionError(PretlabError):
    pass


class InvalidArgument(PreconditionError, ValueError):
    pass


class OutOfRange(PreconditionError):
    pass


class MalformedSpec(PreconditionError, ValueError):
    pass


class NoSolution(PreconditionError):
    pass


class ResultantZero(PreconditionError):
    """Two polynomials share a root, so the correlation formula does not apply."""


class DegenerateForms(PreconditionError):
    pass


class InsufficientBound(PretlabError):
    """A sieving bound was too small to certify a leftover cofactor as prime."""
