"""Cyclic (periodic) banded systems via low-rank corrections.

Tridiagonal, rank 1 (Sherman-Morrison).  With constant bands ``(a, b, c)`` the
cyclic matrix has ``a`` in the top-right corner and ``c`` in the bottom-left.
Writing it as ``A' + u v^T`` with ``u = (-b, 0, ..., 0, c)`` and
``v = (1, 0, ..., 0, -a/b)`` leaves ``A'`` strictly tridiagonal, with
``2b`` and ``b + ac/b`` as its first and last diagonal entries.  Then
``x = y - (v.y / (1 + v.z)) z`` where ``A' y = d`` and ``A' z = u``.

Pentadiagonal, rank 2 (Woodbury).  The corners are the 2x2 blocks
``T = [[a, b], [0, a]]`` (rows 1-2, columns n-1..n) and ``B = [[e, 0], [d, e]]``
(rows n-1..n, columns 1-2).  With ``G = c I``::

    U = [-G; 0; B]          V = [I; 0; -(G^-1 T)^T]

so ``U V^T`` reproduces both corner blocks and ``A' = A - U V^T`` differs
from the banded part of ``A`` only by ``+G`` on the leading 2x2 block and
``+B G^-1 T`` on the trailing one (both inside the band).  Spelled out:
``v1 = e_1 - (a/c) e_{n-1} - (b/c) e_n`` and ``v2 = e_2 - (a/c) e_n``.  For
symmetric ``A`` the added term is positive semidefinite, so ``A'`` stays
positive definite whenever ``A`` is.  The solve is
``x = y - Z (I + V^T Z)^-1 V^T y`` with ``A' Z = U``.  ``U``, ``V`` and ``Z``
are stored transposed, one row per correction vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .banded import (BREAKDOWN_EPS, PentDiagLHS, PentFactor, TriDiagLHS, TriFactor,
                     pent_prefactor, tri_prefactor)
from .errors import DivisionByZero, ShapeMismatch, SingularCorrection
from .layout import InterleavedBatch
from .parallel import run_columns
from .pent import UniformPentFactor, pent_solve_shared_batch, uniform_factor_from
from .tri import _check_batch, tri_solve_shared_batch

__all__ = [
    "PeriodicPentCorrection",
    "PeriodicTriCorrection",
    "cyclic_pent_dense",
    "cyclic_tri_dense",
    "periodic_pent_correct",
    "periodic_pent_prepare",
    "periodic_pent_solve_batch",
    "periodic_tri_correct",
    "periodic_tri_prepare",
    "periodic_tri_solve_batch",
]


# A correction denominator that cancels down to round-off means the cyclic
# matrix itself is numerically singular.
CANCELLATION_TOL = 64 * np.finfo(np.float64).eps


def cyclic_tri_dense(a, b, c, n):
    """Dense ``n x n`` cyclic tridiagonal matrix with constant bands."""
    A = np.zeros((n, n))
    for i in range(n):
        A[i, (i - 1) % n] += a
        A[i, i] += b
        A[i, (i + 1) % n] += c
    return A


def cyclic_pent_dense(a, b, c, d, e, n):
    """Dense ``n x n`` cyclic pentadiagonal matrix with constant bands."""
    A = np.zeros((n, n))
    for i in range(n):
        for off, val in zip((-2, -1, 0, 1, 2), (a, b, c, d, e)):
            A[i, (i + off) % n] += val
    return A


def _solve_vector(solve, factor, rhs):
    batch = InterleavedBatch.from_rows(np.asarray(rhs, dtype=np.float64)[:, None])
    solve(factor, batch, workers=1)
    return batch.data.copy()


# ---------------------------------------------------------------------------
# tridiagonal

@dataclass(frozen=True, eq=False)
class PeriodicTriCorrection:
    a: float
    b: float
    c: float
    lhs: TriDiagLHS
    factor: TriFactor
    z: np.ndarray
    v_first: float
    v_last: float
    denom: float

    @property
    def n(self):
        return self.lhs.n

    def u(self):
        u = np.zeros(self.n)
        u[0] = -self.b
        u[-1] = self.c
        return u

    def v(self):
        v = np.zeros(self.n)
        v[0] = self.v_first
        v[-1] = self.v_last
        return v

    def cyclic_dense(self):
        return cyclic_tri_dense(self.a, self.b, self.c, self.n)


def periodic_tri_prepare(a, b, c, n):
    """Build and factor ``A'`` and solve the one-off correction system.

    Raises
    ------
    DivisionByZero
        If ``b == 0``.
    SingularCorrection
        If ``1 + v.z`` vanishes or cancels down to round-off.
    """
    a, b, c, n = float(a), float(b), float(c), int(n)
    if n < 3:
        raise ShapeMismatch("periodic tridiagonal systems need n >= 3")
    if b == 0.0:
        raise DivisionByZero("periodic splitting divides by the diagonal b, which is 0")
    diag = np.full(n, b)
    diag[0] = 2.0 * b
    diag[-1] = b + a * c / b
    sub = np.full(n, a)
    sub[0] = 0.0
    sup = np.full(n, c)
    sup[-1] = 0.0
    lhs = TriDiagLHS(sub, diag, sup)
    factor = tri_prefactor(lhs)
    u = np.zeros(n)
    u[0] = -b
    u[-1] = c
    z = _solve_vector(tri_solve_shared_batch, factor, u)
    z.flags.writeable = False
    v_last = -a / b
    vz = z[0] + v_last * z[-1]
    denom = 1.0 + vz
    if not abs(denom) > max(BREAKDOWN_EPS, CANCELLATION_TOL * (1.0 + abs(vz))):
        raise SingularCorrection(f"Sherman-Morrison denominator is {denom!r}")
    return PeriodicTriCorrection(a, b, c, lhs, factor, z, 1.0, v_last, denom)


def periodic_tri_correct(corr, y, *, workers=None):
    """Turn ``A' y = d`` solutions into cyclic solutions, in place."""
    _check_batch(corr.n, y)
    run_columns(K.sherman_morrison_apply, y.m, workers, corr.z, corr.v_last, corr.denom,
                y.view())


def periodic_tri_solve_batch(corr, batch, *, workers=None):
    """Solve the cyclic tridiagonal system for every column of ``batch`` in place."""
    tri_solve_shared_batch(corr.factor, batch, workers=workers)
    periodic_tri_correct(corr, batch, workers=workers)


# ---------------------------------------------------------------------------
# pentadiagonal

@dataclass(frozen=True, eq=False)
class PeriodicPentCorrection:
    a: float
    b: float
    c: float
    d: float
    e: float
    lhs: PentDiagLHS
    factor: PentFactor | UniformPentFactor
    Z: np.ndarray        # (2, n), row k solves A' Z[k] = U[k]
    U: np.ndarray        # (2, n)
    V: np.ndarray        # (2, n)
    capacitance: np.ndarray
    cap_inverse: np.ndarray

    @property
    def n(self):
        return self.lhs.n

    def cyclic_dense(self):
        return cyclic_pent_dense(self.a, self.b, self.c, self.d, self.e, self.n)


def periodic_pent_prepare(a, b, c, d, e, n, *, uniform=False):
    """Build, factor and precondition the rank-2 cyclic correction.

    With ``uniform=True`` the factor keeps ``epsilon`` as a scalar; this is
    valid because the modified entries of ``A'`` avoid the outermost
    subdiagonal.

    Raises
    ------
    DivisionByZero
        If ``c == 0``.
    SingularCorrection
        If the 2x2 capacitance matrix is singular to working precision.
    FactorizationBreakdown
        If ``A'`` cannot be factored without pivoting.
    """
    a, b, c, d, e, n = (float(a), float(b), float(c), float(d), float(e), int(n))
    if n < 6:
        raise ShapeMismatch("periodic pentadiagonal systems need n >= 6")
    if c == 0.0:
        raise DivisionByZero("periodic splitting divides by the diagonal c, which is 0")
    base = PentDiagLHS.constant(a, b, c, d, e, n)
    A_a, A_b, A_c, A_d, A_e = (band.copy() for band in base.bands())
    # +G on the leading block
    A_c[0] += c
    A_c[1] += c
    # +B G^-1 T on the trailing block, B G^-1 T = [[ea, eb], [da, db + ea]] / c
    A_c[n - 2] += e * a / c
    A_d[n - 2] += e * b / c
    A_b[n - 1] += d * a / c
    A_c[n - 1] += (d * b + e * a) / c
    lhs = PentDiagLHS(A_a, A_b, A_c, A_d, A_e)
    factor = pent_prefactor(lhs)
    if uniform:
        factor = uniform_factor_from(factor)

    U = np.zeros((2, n))
    U[0, 0] = -c
    U[1, 1] = -c
    U[0, n - 2] = e
    U[0, n - 1] = d
    U[1, n - 1] = e
    V = np.zeros((2, n))
    V[0, 0] = 1.0
    V[1, 1] = 1.0
    V[0, n - 2] = -a / c
    V[0, n - 1] = -b / c
    V[1, n - 1] = -a / c

    Z = np.empty((2, n))
    Z[0] = _solve_vector(pent_solve_shared_batch, factor, U[0])
    Z[1] = _solve_vector(pent_solve_shared_batch, factor, U[1])
    cap = np.eye(2) + V @ Z.T
    diag_term, off_term = cap[0, 0] * cap[1, 1], cap[0, 1] * cap[1, 0]
    det = diag_term - off_term
    if not abs(det) > max(BREAKDOWN_EPS, CANCELLATION_TOL * (abs(diag_term) + abs(off_term))):
        raise SingularCorrection(f"capacitance matrix is singular (det={det!r})")
    cap_inv = np.array([[cap[1, 1], -cap[0, 1]], [-cap[1, 0], cap[0, 0]]]) / det
    for arr in (Z, U, V, cap, cap_inv):
        arr.flags.writeable = False
    return PeriodicPentCorrection(a, b, c, d, e, lhs, factor, Z, U, V, cap, cap_inv)


def periodic_pent_correct(corr, y, *, workers=None):
    """Apply ``y <- y - Z C^-1 V^T y`` to every column, in place."""
    _check_batch(corr.n, y)
    run_columns(K.woodbury_apply, y.m, workers, corr.Z[0], corr.Z[1], corr.V[0], corr.V[1],
                corr.cap_inverse, y.view())


def periodic_pent_solve_batch(corr, batch, *, workers=None):
    """Solve the cyclic pentadiagonal system for every column of ``batch`` in place."""
    pent_solve_shared_batch(corr.factor, batch, workers=workers)
    periodic_pent_correct(corr, batch, workers=workers)
