"""Exception hierarchy shared by all modules."""


class LocalDivError(Exception):
    """Base class for every error raised by this package."""


class ModulusMismatch(LocalDivError, TypeError):
    pass


class NonUnit(LocalDivError, ArithmeticError):
    pass


class NoSolution(LocalDivError, ArithmeticError):
    """The linear system has no solution over the residue ring."""


class DimensionMismatch(LocalDivError, ValueError):
    pass


class SubgroupNotContained(LocalDivError, ValueError):
    pass


class CapExceeded(LocalDivError, RuntimeError):
    """Group closure or a search outgrew its configured cap."""


class NonInvertibleGenerator(LocalDivError, ValueError):
    pass


class IncompleteCocycle(LocalDivError, ValueError):
    pass


class NotACocycle(LocalDivError, ValueError):
    pass


class NotLocallyTrivial(LocalDivError, ValueError):
    pass


class NormalizationObstructed(LocalDivError, ArithmeticError):
    pass


class PreconditionViolated(LocalDivError, ValueError):
    pass


class NoDiagonalDeviation(LocalDivError, ValueError):
    """Every diagonal element fixes the first basis vector exactly (m = n)."""


class SpecViolated(LocalDivError, ValueError):
    pass


class DecompositionFailed(LocalDivError, RuntimeError):
    pass


class BudgetExceeded(LocalDivError, RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
