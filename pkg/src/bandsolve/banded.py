"""Banded left-hand sides, their one-time factorisations and a dense oracle.

Row ``i`` (0-based) of a tridiagonal matrix reads ``sub[i] x[i-1] + diag[i]
x[i] + sup[i] x[i+1]``; ``sub[0]`` and ``sup[n-1]`` are structural zeros.

Row ``i`` of a pentadiagonal matrix reads ``a[i] x[i-2] + b[i] x[i-1] + c[i]
x[i] + d[i] x[i+1] + e[i] x[i+2]``; ``a[0], a[1], b[0], d[n-1], e[n-2],
e[n-1]`` are structural zeros.

Factors store reciprocal pivots so the batch sweeps multiply instead of
divide.  Factor arrays are read-only once built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import FactorizationBreakdown, InvalidBands, ShapeMismatch, SingularMatrix
from .layout import alloc_reals

__all__ = [
    "BREAKDOWN_EPS",
    "PentDiagLHS",
    "PentFactor",
    "TriDiagLHS",
    "TriFactor",
    "dense_solve_oracle",
    "pent_prefactor",
    "tri_prefactor",
]

BREAKDOWN_EPS = 1e-300
ORACLE_MAX_N = 512
ORACLE_PIVOT_TOL = 1e-14


def _as_band(values, name):
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ShapeMismatch(f"band {name} must be 1-D, got shape {arr.shape}")
    return arr


def _freeze(*arrays):
    for arr in arrays:
        arr.flags.writeable = False


# ---------------------------------------------------------------------------
# tridiagonal

@dataclass(frozen=True, eq=False)
class TriDiagLHS:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        sub, diag, sup = (_as_band(v, k) for v, k in
                          ((self.sub, "sub"), (self.diag, "diag"), (self.sup, "sup")))
        if not (sub.size == diag.size == sup.size):
            raise ShapeMismatch(
                f"band lengths differ: sub={sub.size}, diag={diag.size}, sup={sup.size}")
        if diag.size < 2:
            raise ShapeMismatch("tridiagonal systems need n >= 2")
        if sub[0] != 0.0 or sup[-1] != 0.0:
            raise InvalidBands("sub[0] and sup[n-1] are outside the matrix and must be 0")
        if not (np.isfinite(sub).all() and np.isfinite(diag).all() and np.isfinite(sup).all()):
            raise InvalidBands("bands must be finite")
        _freeze(sub, diag, sup)
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "sup", sup)

    @property
    def n(self):
        return self.diag.size

    @classmethod
    def constant(cls, a, b, c, n):
        """Constant bands ``(a, b, c)`` with the unused corners pinned to 0."""
        sub = np.full(n, float(a))
        sup = np.full(n, float(c))
        sub[0] = 0.0
        sup[-1] = 0.0
        return cls(sub, np.full(n, float(b)), sup)

    def to_dense(self):
        n = self.n
        A = np.diag(self.diag)
        A[np.arange(1, n), np.arange(n - 1)] = self.sub[1:]
        A[np.arange(n - 1), np.arange(1, n)] = self.sup[:-1]
        return A

    def matvec(self, x):
        """``A @ x`` for a vector or for each column of an ``(n, m)`` array."""
        x = np.asarray(x, dtype=np.float64)
        col = (slice(None),) + (None,) * (x.ndim - 1)
        y = self.diag[col] * x
        y[1:] += self.sub[1:][col] * x[:-1]
        y[:-1] += self.sup[:-1][col] * x[1:]
        return y


@dataclass(frozen=True, eq=False)
class TriFactor:
    """Thomas prefactorisation: ``chat``, reciprocal pivots and a copy of ``sub``."""

    chat: np.ndarray
    inv_denom: np.ndarray
    sub: np.ndarray

    @property
    def n(self):
        return self.chat.size

    def storage_reals(self):
        return 3 * self.n


def tri_prefactor(lhs):
    """Factor ``lhs`` once for any number of later batch solves.

    ``chat[0] = c[0] / b[0]`` and ``chat[i] = c[i] / (b[i] - a[i] chat[i-1])``;
    ``inv_denom`` keeps the reciprocals of those denominators.

    Raises
    ------
    FactorizationBreakdown
        If a denominator is zero (below ``BREAKDOWN_EPS``) or not finite.
    """
    n = lhs.n
    sub = alloc_reals(n, zero=False)
    sub[...] = lhs.sub
    chat = alloc_reals(n)
    inv_denom = alloc_reals(n)
    bad = K.tri_factor(lhs.sub, lhs.diag, lhs.sup, chat, inv_denom, BREAKDOWN_EPS)
    if bad >= 0:
        pivot = lhs.diag[bad] - (lhs.sub[bad] * chat[bad - 1] if bad else 0.0)
        raise FactorizationBreakdown(bad, value=pivot)
    _freeze(sub, chat, inv_denom)
    return TriFactor(chat, inv_denom, sub)


# ---------------------------------------------------------------------------
# pentadiagonal

_PENT_ZERO_SLOTS = (("a", 0), ("a", 1), ("b", 0), ("d", -1), ("e", -2), ("e", -1))


@dataclass(frozen=True, eq=False)
class PentDiagLHS:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        bands = {k: _as_band(getattr(self, k), k) for k in "abcde"}
        sizes = {arr.size for arr in bands.values()}
        if len(sizes) != 1:
            raise ShapeMismatch(f"band lengths differ: { {k: v.size for k, v in bands.items()} }")
        if bands["c"].size < 5:
            raise ShapeMismatch("pentadiagonal systems need n >= 5")
        for name, idx in _PENT_ZERO_SLOTS:
            if bands[name][idx] != 0.0:
                raise InvalidBands(f"{name}[{idx}] lies outside the matrix and must be 0")
        for name, arr in bands.items():
            if not np.isfinite(arr).all():
                raise InvalidBands(f"band {name} must be finite")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.c.size

    @classmethod
    def constant(cls, a, b, c, d, e, n):
        bands = [np.full(n, float(v)) for v in (a, b, c, d, e)]
        for name, idx in _PENT_ZERO_SLOTS:
            bands["abcde".index(name)][idx] = 0.0
        return cls(*bands)

    def bands(self):
        return self.a, self.b, self.c, self.d, self.e

    def to_dense(self):
        n = self.n
        A = np.zeros((n, n))
        for band, off in zip(self.bands(), (-2, -1, 0, 1, 2)):
            rows = np.arange(max(0, -off), min(n, n - off))
            A[rows, rows + off] = band[rows]
        return A

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        col = (slice(None),) + (None,) * (x.ndim - 1)
        y = self.c[col] * x
        y[2:] += self.a[2:][col] * x[:-2]
        y[1:] += self.b[1:][col] * x[:-1]
        y[:-1] += self.d[:-1][col] * x[1:]
        y[:-2] += self.e[:-2][col] * x[2:]
        return y


@dataclass(frozen=True, eq=False)
class PentFactor:
    """``A = L R``: ``L`` carries ``epsilon, beta, alpha`` on diagonals -2, -1, 0;
    ``R`` is unit upper triangular with ``gamma, delta`` on diagonals +1, +2.
    ``alpha`` is stored as its reciprocal."""

    inv_alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    epsilon: np.ndarray

    @property
    def n(self):
        return self.inv_alpha.size

    def storage_reals(self):
        return 5 * self.n

    def lower_dense(self):
        n = self.n
        L = np.diag(1.0 / self.inv_alpha)
        L[np.arange(1, n), np.arange(n - 1)] = self.beta[1:]
        L[np.arange(2, n), np.arange(n - 2)] = self.epsilon[2:]
        return L

    def upper_dense(self):
        n = self.n
        R = np.eye(n)
        R[np.arange(n - 1), np.arange(1, n)] = self.gamma[:-1]
        R[np.arange(n - 2), np.arange(2, n)] = self.delta[:-2]
        return R


def pent_prefactor(lhs):
    """LR-factor a pentadiagonal ``lhs`` once (reciprocal ``alpha`` stored).

    Raises
    ------
    FactorizationBreakdown
        If some ``alpha_i`` is zero (below ``BREAKDOWN_EPS``) or not finite.
    """
    inv_alpha, beta, gamma, delta, epsilon = (alloc_reals(lhs.n) for _ in range(5))
    bad = K.pent_factor(*lhs.bands(), inv_alpha, beta, gamma, delta, epsilon, BREAKDOWN_EPS)
    if bad >= 0:
        raise FactorizationBreakdown(bad)
    _freeze(inv_alpha, beta, gamma, delta, epsilon)
    return PentFactor(inv_alpha, beta, gamma, delta, epsilon)


# ---------------------------------------------------------------------------
# dense reference

def dense_solve_oracle(matrix, rhs):
    """Gaussian elimination with partial pivoting on a dense copy.

    Test oracle only; no solver path calls it.  ``rhs`` may be a vector or an
    ``(n, k)`` array of right-hand sides.
    """
    A = np.array(matrix, dtype=np.float64, copy=True)
    x = np.array(rhs, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"matrix must be square, got {A.shape}")
    n = A.shape[0]
    if n > ORACLE_MAX_N:
        raise ValueError(f"dense oracle is limited to n <= {ORACLE_MAX_N}, got {n}")
    if x.shape[0] != n:
        raise ShapeMismatch(f"rhs has {x.shape[0]} rows, matrix has {n}")
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) <= ORACLE_PIVOT_TOL:
            raise SingularMatrix(f"no pivot above {ORACLE_PIVOT_TOL} in column {k}")
        if p != k:
            A[[k, p]] = A[[p, k]]
            x[[k, p]] = x[[p, k]]
        factors = A[k + 1:, k] / A[k, k]
        A[k + 1:, k:] -= np.outer(factors, A[k, k:])
        x[k + 1:] -= np.multiply.outer(factors, x[k])
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x
