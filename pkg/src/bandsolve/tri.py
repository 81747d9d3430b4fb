"""Batched Thomas solves over interleaved right-hand sides.

:func:`tri_solve_shared_batch` reuses one prefactored LHS for every system.
:func:`tri_solve_per_system_batch` is the baseline where each system carries
its own interleaved copy of the three bands and elimination destroys them,
so repeated time steps must re-copy the bands first.
"""

from dataclasses import dataclass

from . import _kernels as K
from .banded import BREAKDOWN_EPS
from .errors import FactorizationBreakdown, ShapeMismatch
from .layout import InterleavedBatch, alloc_reals
from .parallel import first_failure, run_columns

__all__ = ["TriBandBatch", "tri_solve_per_system_batch", "tri_solve_shared_batch"]


def _check_batch(n, batch):
    if not isinstance(batch, InterleavedBatch):
        raise TypeError("solvers take an InterleavedBatch; use interleave() first")
    if batch.n != n:
        raise ShapeMismatch(f"factor has n={n}, batch has n={batch.n}")


def tri_solve_shared_batch(factor, batch, *, workers=None):
    """Overwrite every column of ``batch`` with the solution of ``A x = d``.

    The factor is only read, so the same factor can serve any number of
    batches and time steps.
    """
    _check_batch(factor.n, batch)
    run_columns(K.tri_sweep_shared, batch.m, workers,
                factor.chat, factor.inv_denom, factor.sub, batch.view())


@dataclass(eq=False)
class TriBandBatch:
    """Per-system band copies ``a, b, c`` in interleaved layout."""

    a: InterleavedBatch
    b: InterleavedBatch
    c: InterleavedBatch

    @property
    def n(self):
        return self.a.n

    @property
    def m(self):
        return self.a.m

    @classmethod
    def allocate(cls, n, m):
        return cls(*(InterleavedBatch(alloc_reals(n * m), n, m) for _ in range(3)))

    @classmethod
    def replicate(cls, lhs, m):
        bands = cls.allocate(lhs.n, m)
        bands.reset_from(lhs)
        return bands

    def reset_from(self, lhs, *, workers=None):
        """Copy the shared bands of ``lhs`` into every system slot."""
        if lhs.n != self.n:
            raise ShapeMismatch(f"lhs has n={lhs.n}, band batch has n={self.n}")
        run_columns(K.broadcast_bands3, self.m, workers, lhs.sub, lhs.diag, lhs.sup,
                    self.a.view(), self.b.view(), self.c.view())


def tri_solve_per_system_batch(bands, rhs, *, workers=None):
    """Factor-and-solve each column with its own bands, in place.

    On return ``rhs`` holds the solutions and ``bands`` is consumed: ``a`` is
    zeroed, ``b`` holds reciprocal pivots and ``c`` the modified
    superdiagonal.

    Raises
    ------
    FactorizationBreakdown
        Carrying the failing row and column.
    """
    if not (bands.a.shape == bands.b.shape == bands.c.shape == rhs.shape):
        raise ShapeMismatch(
            f"band/rhs shapes differ: {bands.a.shape}, {bands.b.shape}, "
            f"{bands.c.shape}, {rhs.shape}")
    status = run_columns(K.tri_solve_per_system, rhs.m, workers,
                         bands.a.view(), bands.b.view(), bands.c.view(), rhs.view(),
                         BREAKDOWN_EPS)
    bad = first_failure(status)
    if bad >= 0:
        row, col = divmod(bad, rhs.m)
        raise FactorizationBreakdown(row, col)
