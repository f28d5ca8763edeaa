"""Exception types raised by the numerical core."""


class BoundsError(ValueError):
    """Base class for invalid inputs to the bound machinery."""


class DegenerateModelError(BoundsError):
    """No outcome carries probability above the support threshold."""


class NumericalError(ArithmeticError):
    """A numerical precondition failed (PSD violation, truncation leakage, ...)."""


class NotPSDError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class RankDeficientStateError(NumericalError):
    pass
