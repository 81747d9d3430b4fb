"""Random system generators and independent oracles shared by the tests."""

from fractions import Fraction

import numpy as np

from bandsolve import PentDiagLHS, TriDiagLHS


def random_tri(rng, n, margin=0.5):
    sub = rng.uniform(-1.0, 1.0, n)
    sup = rng.uniform(-1.0, 1.0, n)
    sub[0] = 0.0
    sup[-1] = 0.0
    sign = rng.choice([-1.0, 1.0], n)
    diag = sign * (np.abs(sub) + np.abs(sup) + rng.uniform(margin, margin + 1.0, n))
    return TriDiagLHS(sub, diag, sup)


def random_pent(rng, n, margin=0.5):
    a, b, d, e = (rng.uniform(-1.0, 1.0, n) for _ in range(4))
    a[:2] = 0.0
    b[0] = 0.0
    d[-1] = 0.0
    e[-2:] = 0.0
    sign = rng.choice([-1.0, 1.0], n)
    c = sign * (np.abs(a) + np.abs(b) + np.abs(d) + np.abs(e) + rng.uniform(margin, margin + 1.0, n))
    return PentDiagLHS(a, b, c, d, e)


def random_dominant_constants(rng, width, margin=0.5):
    """Constant bands with the centre band dominant (random sign)."""
    off = rng.uniform(-1.0, 1.0, width - 1)
    centre = rng.choice([-1.0, 1.0]) * (np.abs(off).sum() + rng.uniform(margin, margin + 1.0))
    half = (width - 1) // 2
    return tuple(off[:half]) + (centre,) + tuple(off[half:])


def crout_exact(dense):
    """Exact ``A = L R`` with ``R`` unit upper triangular, in rationals.

    Unique when it exists, so its entries pin down any correct banded
    factorisation without sharing code with it.
    """
    A = [[Fraction(float(v)) for v in row] for row in dense]
    n = len(A)
    L = [[Fraction(0)] * n for _ in range(n)]
    R = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(k, n):
            L[i][k] = A[i][k] - sum(L[i][s] * R[s][k] for s in range(k))
        for j in range(k + 1, n):
            R[k][j] = (A[k][j] - sum(L[k][s] * R[s][j] for s in range(k))) / L[k][k]
    return L, R


def rel_err(x, ref):
    """Column-wise ``|x - ref|_inf / |ref|_inf`` (max over columns)."""
    x = np.asarray(x)
    ref = np.asarray(ref)
    if x.ndim == 1:
        x, ref = x[:, None], ref[:, None]
    scale = np.maximum(np.abs(ref).max(axis=0), np.finfo(float).tiny)
    return float((np.abs(x - ref).max(axis=0) / scale).max())
