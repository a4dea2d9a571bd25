"""Exception types raised across the package."""


class CpBoundsError(Exception):
    """Base class for every error raised by this package."""


class UnassignedVariable(CpBoundsError, KeyError):
    def __init__(self, var):
        super().__init__(var)
        self.var = var

    def __str__(self):
        return f"variable {self.var} has no value in the point"


class UndeclaredVariable(CpBoundsError, ValueError):
    pass


class DuplicateTag(CpBoundsError, ValueError):
    pass


class InstanceTooSmall(CpBoundsError, ValueError):
    pass


class OutOfRange(CpBoundsError, ValueError):
    pass


class NonPositiveBound(CpBoundsError, ValueError):
    pass


class DegenerateDomain(CpBoundsError, ValueError):
    pass


class StrategyInfeasible(CpBoundsError, ValueError):
    pass


class BadAlpha(CpBoundsError, ValueError):
    pass


class SetTooSmall(CpBoundsError, ValueError):
    pass


class MixedBlocks(CpBoundsError, ValueError):
    pass


class NumericBlowup(CpBoundsError, ArithmeticError):
    pass


class SignError(CpBoundsError, ValueError):
    pass


class NoPointAvailable(CpBoundsError, LookupError):
    pass


class NoCertificateAvailable(CpBoundsError, LookupError):
    pass


class BadParity(CpBoundsError, ValueError):
    pass


class NotSymmetric(CpBoundsError, ValueError):
    pass


class NegativeGamma(CpBoundsError, ValueError):
    pass


class Unavailable(CpBoundsError, LookupError):
    pass


class MismatchDetected(CpBoundsError, AssertionError):
    pass


class ParseError(CpBoundsError, ValueError):
    pass


class MonotonicityViolation(CpBoundsError, ValueError):
    pass


class IoFailure(CpBoundsError, OSError):
    pass
