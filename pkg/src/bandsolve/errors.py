"""Exception types raised by the solvers and file readers."""


class BandSolveError(Exception):
    """Base class for all library errors."""


class ShapeMismatch(BandSolveError, ValueError):
    """Buffers, factors or batches disagree on n or m."""


class InvalidBands(BandSolveError, ValueError):
    """Band vectors violate the structural zero / finiteness rules."""


class FactorizationBreakdown(BandSolveError, ArithmeticError):
    """A pivot fell below ``BREAKDOWN_EPS`` during pivot-free elimination.

    ``row`` is the 0-based row where the pivot vanished; ``column`` is the
    system index for per-system solves and ``None`` for a shared factor.
    """

    def __init__(self, row, column=None, value=None):
        self.row = row
        self.column = column
        self.value = value
        where = f"row {row}" if column is None else f"row {row} of system {column}"
        super().__init__(f"zero pivot at {where} (value={value!r})")


class SingularMatrix(BandSolveError, ArithmeticError):
    """The dense reference solver found no usable pivot."""


class SingularCorrection(BandSolveError, ArithmeticError):
    """The Sherman-Morrison denominator or Woodbury capacitance is singular."""


class DivisionByZero(BandSolveError, ZeroDivisionError):
    """A periodic splitting parameter that must be divided by is zero."""


class MalformedBatchFile(BandSolveError, ValueError):
    """An IBAT file has a bad magic, version, or payload size."""
