"""Exception types shared across the package.

Every error derives from :class:`QitError`, which is itself a ``ValueError``
so callers that only care about bad input can catch the builtin.
"""


class QitError(ValueError):
    """Base class for all validation errors raised by ``qit``."""


class NonHermitian(QitError):
    pass


class NotPSD(QitError):
    pass


class DimensionMismatch(QitError):
    pass


class FunctionDomainError(QitError):
    pass


class BadDims(QitError):
    pass


class NotCP(QitError):
    pass


class NotClassical(QitError):
    pass


class TooLarge(QitError):
    pass


class EpsTooLarge(QitError):
    pass


class LambdaTooLarge(QitError):
    pass


class RangeError(QitError):
    pass


class BasisNotON(QitError):
    pass


class NonConvergence(RuntimeError):
    """An iterative routine or the SDP backend stopped before certifying its result.

    Carries the partial result (if any) so the caller can still report it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
