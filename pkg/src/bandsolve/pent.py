"""Batched pentadiagonal solves: shared factor, per-system baseline, uniform bands."""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .banded import BREAKDOWN_EPS, PentDiagLHS
from .errors import FactorizationBreakdown, InvalidBands, ShapeMismatch
from .layout import InterleavedBatch, alloc_reals
from .parallel import first_failure, run_columns
from .tri import _check_batch

__all__ = [
    "PentBandBatch",
    "UniformPentFactor",
    "UniformPentLHS",
    "pent_factor_per_system_batch",
    "pent_solve_factored_per_system_batch",
    "pent_solve_per_system_batch",
    "pent_solve_shared_batch",
    "pent_solve_uniform_batch",
    "uniform_factor_from",
    "uniform_prefactor",
]


def pent_solve_shared_batch(factor, batch, *, workers=None):
    """Solve ``L R x = f`` for every column of ``batch`` in place.

    ``g`` overwrites ``f`` during the forward pass and ``x`` overwrites ``g``
    during back-substitution, so no scratch buffer is needed.
    """
    if isinstance(factor, UniformPentFactor):
        return pent_solve_uniform_batch(factor, batch, workers=workers)
    _check_batch(factor.n, batch)
    run_columns(K.pent_sweep, batch.m, workers, factor.inv_alpha, factor.beta,
                factor.gamma, factor.delta, factor.epsilon, batch.view())


# ---------------------------------------------------------------------------
# uniform bands

@dataclass(frozen=True)
class UniformPentLHS:
    """Pentadiagonal matrix whose bands are each a single repeated value."""

    a: float
    b: float
    c: float
    d: float
    e: float
    n: int

    def __post_init__(self):
        if int(self.n) < 5:
            raise ShapeMismatch("pentadiagonal systems need n >= 5")
        if not np.isfinite([self.a, self.b, self.c, self.d, self.e]).all():
            raise InvalidBands("band values must be finite")

    def expand(self):
        return PentDiagLHS.constant(self.a, self.b, self.c, self.d, self.e, self.n)


@dataclass(frozen=True, eq=False)
class UniformPentFactor:
    """LR factor with ``epsilon`` kept as one scalar (4n + 1 reals)."""

    inv_alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    eps_scalar: float

    @property
    def n(self):
        return self.inv_alpha.size

    def storage_reals(self):
        return 4 * self.n + 1

    def epsilon_view(self):
        # stride-0 view: the sweep reads one value for every row
        return np.broadcast_to(np.float64(self.eps_scalar), (self.n,))


def uniform_factor_from(factor):
    """Drop the epsilon vector of ``factor`` in favour of a scalar.

    Valid whenever the second subdiagonal is constant over the rows the
    forward pass reads (rows 2 and up).  This also covers the periodic
    correction matrices, whose modified entries sit on other bands.
    """
    tail = factor.epsilon[2:]
    if tail.size and not (tail == tail[0]).all():
        raise InvalidBands("second subdiagonal is not constant; uniform factor impossible")
    vectors = []
    for src in (factor.inv_alpha, factor.beta, factor.gamma, factor.delta):
        dst = alloc_reals(factor.n, zero=False)
        dst[...] = src
        dst.flags.writeable = False
        vectors.append(dst)
    eps = float(tail[0]) if tail.size else 0.0
    return UniformPentFactor(*vectors, eps)


def uniform_prefactor(lhs):
    """Factor constant-band ``lhs``; numerically the same as :func:`pent_prefactor`
    on the expanded matrix, with ``epsilon`` stored as ``lhs.a``."""
    n = lhs.n
    a = np.broadcast_to(np.float64(lhs.a), (n,))
    b = np.full(n, float(lhs.b))
    c = np.full(n, float(lhs.c))
    d = np.full(n, float(lhs.d))
    e = np.full(n, float(lhs.e))
    b[0] = 0.0
    d[-1] = 0.0
    e[-2:] = 0.0
    inv_alpha, beta, gamma, delta = (alloc_reals(n) for _ in range(4))
    # a[0], a[1] never enter the recurrences, so the scalar view is safe here;
    # the epsilon copy-out lands on a single stride-0 slot, not a vector
    scratch_eps = np.lib.stride_tricks.as_strided(np.empty(1), (n,), (0,))
    bad = K.pent_factor(a, b, c, d, e, inv_alpha, beta, gamma, delta, scratch_eps,
                        BREAKDOWN_EPS)
    if bad >= 0:
        raise FactorizationBreakdown(bad)
    for arr in (inv_alpha, beta, gamma, delta):
        arr.flags.writeable = False
    return UniformPentFactor(inv_alpha, beta, gamma, delta, float(lhs.a))


def pent_solve_uniform_batch(factor, batch, *, workers=None):
    """As :func:`pent_solve_shared_batch`, reading a scalar ``epsilon``."""
    _check_batch(factor.n, batch)
    run_columns(K.pent_sweep, batch.m, workers, factor.inv_alpha, factor.beta,
                factor.gamma, factor.delta, factor.epsilon_view(), batch.view())


# ---------------------------------------------------------------------------
# per-system baseline

@dataclass(eq=False)
class PentBandBatch:
    """Per-system copies of the five bands, interleaved."""

    a: InterleavedBatch
    b: InterleavedBatch
    c: InterleavedBatch
    d: InterleavedBatch
    e: InterleavedBatch

    @property
    def n(self):
        return self.a.n

    @property
    def m(self):
        return self.a.m

    @classmethod
    def allocate(cls, n, m):
        return cls(*(InterleavedBatch(alloc_reals(n * m), n, m) for _ in range(5)))

    @classmethod
    def replicate(cls, lhs, m):
        bands = cls.allocate(lhs.n, m)
        bands.reset_from(lhs)
        return bands

    def reset_from(self, lhs):
        if lhs.n != self.n:
            raise ShapeMismatch(f"lhs has n={lhs.n}, band batch has n={self.n}")
        for dst, src in zip(self.views(), lhs.bands()):
            np.copyto(dst, src[:, None])

    def views(self):
        return tuple(x.view() for x in (self.a, self.b, self.c, self.d, self.e))

    def shapes(self):
        return [x.shape for x in (self.a, self.b, self.c, self.d, self.e)]


def _check_bands(bands, rhs):
    shapes = bands.shapes()
    if any(s != rhs.shape for s in shapes):
        raise ShapeMismatch(f"band/rhs shapes differ: {shapes} vs {rhs.shape}")
    if rhs.n < 5:
        raise ShapeMismatch("pentadiagonal systems need n >= 5")


def pent_factor_per_system_batch(bands, *, workers=None):
    """Factor every system's own bands in place.

    Afterwards ``b`` holds beta, ``c`` the reciprocal alpha, ``d`` gamma and
    ``e`` delta; ``a`` already equals epsilon and is left as is.
    """
    _check_bands(bands, bands.a)
    status = run_columns(K.pent_factor_per_system, bands.m, workers, *bands.views(),
                         BREAKDOWN_EPS)
    bad = first_failure(status)
    if bad >= 0:
        row, col = divmod(bad, bands.m)
        raise FactorizationBreakdown(row, col)


def pent_solve_factored_per_system_batch(bands, rhs, *, workers=None):
    """Forward/back substitution with per-system factors from
    :func:`pent_factor_per_system_batch`; ``bands`` is not modified."""
    _check_bands(bands, rhs)
    run_columns(K.pent_sweep_per_system, rhs.m, workers, *bands.views(), rhs.view())


def pent_solve_per_system_batch(bands, rhs, *, workers=None):
    """Destructive factor-and-solve with each system's own bands."""
    _check_bands(bands, rhs)
    pent_factor_per_system_batch(bands, workers=workers)
    pent_solve_factored_per_system_batch(bands, rhs, workers=workers)
