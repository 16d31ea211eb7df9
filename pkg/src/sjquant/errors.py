"""Exception hierarchy.

Every error raised on bad input derives from :class:`SJQError` so the CLI can
map it to exit code 2 without catching unrelated exceptions.
"""


class SJQError(Exception):
    """Base class for all package errors."""


class InputError(SJQError):
    """Malformed or inconsistent user input."""


class ShapeMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class ModeMismatch(InputError):
    pass


class NotAntisymmetric(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class OddRank(SJQError):
    """The numerical rank of the Pauli-Jordan operator is odd."""


class DegenerateInput(SJQError):
    """All singular values fall below the rank tolerance."""


class SingularE(SJQError):
    pass


class SingularOmega(SJQError):
    pass


class InvalidTheta(InputError):
    pass


class CycleDetected(InputError):
    pass


class MalformedInput(InputError):
    pass


class DegreeTooHigh(SJQError):
    pass


class NotPolynomial(SJQError):
    pass


class TruncationTooSmall(SJQError):
    pass


class NoClosedForm(SJQError):
    pass


class NotExpandable(SJQError):
    pass
