"""Exception hierarchy shared by all modules."""


class MatsnError(ValueError):
    """Base class for every error raised by this package."""


class ShapeMismatch(MatsnError):
    pass


class NotSymmetric(MatsnError):
    pass


class NotPositiveDefinite(MatsnError):
    pass


class NonPositiveDiagonal(MatsnError):
    pass


class DimensionTooLarge(MatsnError):
    pass


class DegenerateSkew(MatsnError):
    """delta' Omega^-1 delta is not strictly below one."""


class ArgumentTooLarge(MatsnError):
    pass


class RankDeficient(MatsnError):
    pass


class IndexOutOfRange(MatsnError, IndexError):
    pass


class NonFiniteValue(MatsnError):
    pass


class MixturePdFailure(MatsnError):
    """Raised when an interpolated law loses positive definiteness."""

    def __init__(self, lam: float, which: str):
        self.lam = float(lam)
        self.which = which
        super().__init__(f"{which} is not positive definite at lambda={self.lam:.6g}")


class ConfigError(MatsnError):
    pass
