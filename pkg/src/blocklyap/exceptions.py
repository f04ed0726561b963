"""Exception hierarchy shared by all modules."""


class BlockLyapError(Exception):
    """Base class for all errors raised by blocklyap."""


class DimensionError(BlockLyapError, ValueError):
    pass


class ShapeError(BlockLyapError, ValueError):
    """Matrix fails a structural requirement (e.g. symmetry)."""


class ParseError(BlockLyapError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class FactorizationError(BlockLyapError, ArithmeticError):
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class PreconditionError(BlockLyapError):
    """An input violates the precondition of a construction."""


class NotHurwitz(PreconditionError):
    pass


class NotHurwitzBlock(NotHurwitz):
    """A diagonal block of a partitioned matrix is not Hurwitz."""


class NotHPlus(PreconditionError):
    pass


class SmallGainViolated(PreconditionError):
    pass


class ImaginaryAxisEigenvalues(PreconditionError):
    """Hamiltonian has eigenvalues on the imaginary axis; no stabilizing solution."""


class Infeasible(BlockLyapError):
    """An optimization or feasibility problem has no solution."""


class NoInitialPoint(Infeasible):
    pass


class IrreducibilityFallback(BlockLyapError):
    """Perron vector has (numerically) zero components."""


class LpError(BlockLyapError):
    """The simplex solver could not complete (singular basis, iteration limit)."""


class ConsistencyError(BlockLyapError, AssertionError):
    """An internal postcondition that is guaranteed by theory failed."""
