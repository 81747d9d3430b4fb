"""Compiled inner loops.

Batch kernels work on ``(n, m)`` views of interleaved buffers and handle the
column range ``[j0, j1)`` only, so callers can split the batch across threads.
Loops run row-outer / column-inner: each recurrence step is a contiguous pass
over the row.  No fastmath: results must not depend on how columns are split.

Kernels that can hit a zero pivot return the flat index ``i * m + j`` of the
first failure (``i * 1`` for single-LHS kernels), or -1.
"""

import numba as nb

_jit = nb.njit(nogil=True, cache=True)


@_jit
def ok(pivot, eps):
    # written so that NaN pivots fail too
    return abs(pivot) >= eps


# ---------------------------------------------------------------------------
# tridiagonal

@_jit
def tri_factor(sub, diag, sup, chat, inv_denom, eps):
    n = diag.shape[0]
    denom = diag[0]
    if not ok(denom, eps):
        return 0
    inv_denom[0] = 1.0 / denom
    chat[0] = sup[0] / denom
    for i in range(1, n):
        denom = diag[i] - sub[i] * chat[i - 1]
        if not ok(denom, eps):
            return i
        inv_denom[i] = 1.0 / denom
        chat[i] = sup[i] / denom
    return -1


@_jit
def tri_sweep_shared(chat, inv_denom, sub, x, j0, j1):
    n = x.shape[0]
    m0 = inv_denom[0]
    for j in range(j0, j1):
        x[0, j] = x[0, j] * m0
    for i in range(1, n):
        a = sub[i]
        mi = inv_denom[i]
        for j in range(j0, j1):
            x[i, j] = (x[i, j] - a * x[i - 1, j]) * mi
    for i in range(n - 2, -1, -1):
        c = chat[i]
        for j in range(j0, j1):
            x[i, j] = x[i, j] - c * x[i + 1, j]
    return -1


@_jit
def tri_solve_per_system(a, b, c, d, eps, j0, j1):
    # destructive: c <- chat, b <- 1/denominator, a <- 0 (eliminated)
    n, m = d.shape
    for j in range(j0, j1):
        denom = b[0, j]
        if not ok(denom, eps):
            return j
        inv = 1.0 / denom
        c[0, j] = c[0, j] / denom
        b[0, j] = inv
        d[0, j] = d[0, j] * inv
        a[0, j] = 0.0
    for i in range(1, n):
        for j in range(j0, j1):
            denom = b[i, j] - a[i, j] * c[i - 1, j]
            if not ok(denom, eps):
                return i * m + j
            inv = 1.0 / denom
            c[i, j] = c[i, j] / denom
            b[i, j] = inv
            d[i, j] = (d[i, j] - a[i, j] * d[i - 1, j]) * inv
            a[i, j] = 0.0
    for i in range(n - 2, -1, -1):
        for j in range(j0, j1):
            d[i, j] = d[i, j] - c[i, j] * d[i + 1, j]
    return -1


# ---------------------------------------------------------------------------
# pentadiagonal

@_jit
def pent_factor(a, b, c, d, e, inv_alpha, beta, gamma, delta, epsilon, eps):
    """LR factorisation, one step per line of the textbook recipe (0-based)."""
    n = c.shape[0]
    # 1-3
    alpha = c[0]
    if not ok(alpha, eps):
        return 0
    inv_alpha[0] = 1.0 / alpha
    gamma[0] = d[0] / alpha
    delta[0] = e[0] / alpha
    # 4-7
    beta[1] = b[1]
    alpha = c[1] - beta[1] * gamma[0]
    if not ok(alpha, eps):
        return 1
    inv_alpha[1] = 1.0 / alpha
    gamma[1] = (d[1] - beta[1] * delta[0]) / alpha
    delta[1] = e[1] / alpha
    # 8
    for i in range(2, n - 2):
        beta[i] = b[i] - a[i] * gamma[i - 2]
        alpha = c[i] - a[i] * delta[i - 2] - beta[i] * gamma[i - 1]
        if not ok(alpha, eps):
            return i
        inv_alpha[i] = 1.0 / alpha
        gamma[i] = (d[i] - beta[i] * delta[i - 1]) / alpha
        delta[i] = e[i] / alpha
    # 9-11
    i = n - 2
    beta[i] = b[i] - a[i] * gamma[i - 2]
    alpha = c[i] - a[i] * delta[i - 2] - beta[i] * gamma[i - 1]
    if not ok(alpha, eps):
        return i
    inv_alpha[i] = 1.0 / alpha
    gamma[i] = (d[i] - beta[i] * delta[i - 1]) / alpha
    # 12-13
    i = n - 1
    beta[i] = b[i] - a[i] * gamma[i - 2]
    alpha = c[i] - a[i] * delta[i - 2] - beta[i] * gamma[i - 1]
    if not ok(alpha, eps):
        return i
    inv_alpha[i] = 1.0 / alpha
    # 14
    for i in range(n):
        epsilon[i] = a[i]
    return -1


@_jit
def pent_sweep(inv_alpha, beta, gamma, delta, epsilon, f, j0, j1):
    # epsilon may be a stride-0 view of a single scalar (uniform bands)
    n = f.shape[0]
    ia = inv_alpha[0]
    for j in range(j0, j1):
        f[0, j] = f[0, j] * ia
    ia = inv_alpha[1]
    bt = beta[1]
    for j in range(j0, j1):
        f[1, j] = (f[1, j] - bt * f[0, j]) * ia
    for i in range(2, n):
        ia = inv_alpha[i]
        bt = beta[i]
        ep = epsilon[i]
        for j in range(j0, j1):
            f[i, j] = (f[i, j] - ep * f[i - 2, j] - bt * f[i - 1, j]) * ia
    gm = gamma[n - 2]
    for j in range(j0, j1):
        f[n - 2, j] = f[n - 2, j] - gm * f[n - 1, j]
    for i in range(n - 3, -1, -1):
        gm = gamma[i]
        dl = delta[i]
        for j in range(j0, j1):
            f[i, j] = f[i, j] - gm * f[i + 1, j] - dl * f[i + 2, j]
    return -1


@_jit
def pent_factor_per_system(a, b, c, d, e, eps, j0, j1):
    # in place: b <- beta, c <- 1/alpha, d <- gamma, e <- delta; a is epsilon
    n, m = c.shape
    for i in range(n):
        for j in range(j0, j1):
            if i == 0:
                bt = b[i, j]
                alpha = c[i, j]
            elif i == 1:
                bt = b[i, j]
                alpha = c[i, j] - bt * d[i - 1, j]
            else:
                bt = b[i, j] - a[i, j] * d[i - 2, j]
                alpha = c[i, j] - a[i, j] * e[i - 2, j] - bt * d[i - 1, j]
            if not ok(alpha, eps):
                return i * m + j
            b[i, j] = bt
            c[i, j] = 1.0 / alpha
            if i == 0:
                d[i, j] = d[i, j] / alpha
            elif i <= n - 2:
                d[i, j] = (d[i, j] - bt * e[i - 1, j]) / alpha
            if i <= n - 3:
                e[i, j] = e[i, j] / alpha
    return -1


@_jit
def pent_sweep_per_system(a, b, c, d, e, f, j0, j1):
    n = f.shape[0]
    for j in range(j0, j1):
        f[0, j] = f[0, j] * c[0, j]
    for j in range(j0, j1):
        f[1, j] = (f[1, j] - b[1, j] * f[0, j]) * c[1, j]
    for i in range(2, n):
        for j in range(j0, j1):
            f[i, j] = (f[i, j] - a[i, j] * f[i - 2, j] - b[i, j] * f[i - 1, j]) * c[i, j]
    for j in range(j0, j1):
        f[n - 2, j] = f[n - 2, j] - d[n - 2, j] * f[n - 1, j]
    for i in range(n - 3, -1, -1):
        for j in range(j0, j1):
            f[i, j] = f[i, j] - d[i, j] * f[i + 1, j] - e[i, j] * f[i + 2, j]
    return -1


# ---------------------------------------------------------------------------
# periodic corrections
#
# The correction coefficient of a column only depends on the boundary rows of
# y, so interior rows are updated first and the boundary rows last; the
# coefficient is recomputed per row instead of kept in an m-long scratch.

@_jit
def sherman_morrison_apply(z, v_last, denom, y, j0, j1):
    n = y.shape[0]
    for i in range(1, n - 1):
        zi = z[i]
        for j in range(j0, j1):
            coef = (y[0, j] + v_last * y[n - 1, j]) / denom
            y[i, j] = y[i, j] - coef * zi
    z0 = z[0]
    zn = z[n - 1]
    for j in range(j0, j1):
        coef = (y[0, j] + v_last * y[n - 1, j]) / denom
        y[0, j] = y[0, j] - coef * z0
        y[n - 1, j] = y[n - 1, j] - coef * zn
    return -1


@_jit
def woodbury_apply(z1, z2, v1, v2, cinv, y, j0, j1):
    # v1, v2 are supported on rows {0, 1, n-2, n-1}
    n = y.shape[0]
    p, q, r, s = n - 2, n - 1, 0, 1
    for i in range(2, n - 2):
        a1 = z1[i]
        a2 = z2[i]
        for j in range(j0, j1):
            w1 = v1[r] * y[r, j] + v1[s] * y[s, j] + v1[p] * y[p, j] + v1[q] * y[q, j]
            w2 = v2[r] * y[r, j] + v2[s] * y[s, j] + v2[p] * y[p, j] + v2[q] * y[q, j]
            t1 = cinv[0, 0] * w1 + cinv[0, 1] * w2
            t2 = cinv[1, 0] * w1 + cinv[1, 1] * w2
            y[i, j] = y[i, j] - a1 * t1 - a2 * t2
    for j in range(j0, j1):
        w1 = v1[r] * y[r, j] + v1[s] * y[s, j] + v1[p] * y[p, j] + v1[q] * y[q, j]
        w2 = v2[r] * y[r, j] + v2[s] * y[s, j] + v2[p] * y[p, j] + v2[q] * y[q, j]
        t1 = cinv[0, 0] * w1 + cinv[0, 1] * w2
        t2 = cinv[1, 0] * w1 + cinv[1, 1] * w2
        y[r, j] = y[r, j] - z1[r] * t1 - z2[r] * t2
        y[s, j] = y[s, j] - z1[s] * t1 - z2[s] * t2
        y[p, j] = y[p, j] - z1[p] * t1 - z2[p] * t2
        y[q, j] = y[q, j] - z1[q] * t1 - z2[q] * t2
    return -1


# ---------------------------------------------------------------------------
# periodic stencils (right-hand-side assembly)

@_jit
def stencil3_periodic(w_m1, w_0, w_p1, src, out, j0, j1):
    n = src.shape[0]
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        for j in range(j0, j1):
            out[i, j] = w_m1 * src[im, j] + w_0 * src[i, j] + w_p1 * src[ip, j]
    return -1


@_jit
def stencil5_periodic(w_m2, w_m1, w_0, w_p1, w_p2, src, out, j0, j1):
    n = src.shape[0]
    for i in range(n):
        im2 = (i - 2) % n
        im1 = (i - 1) % n
        ip1 = (i + 1) % n
        ip2 = (i + 2) % n
        for j in range(j0, j1):
            out[i, j] = (w_m2 * src[im2, j] + w_m1 * src[im1, j] + w_0 * src[i, j]
                         + w_p1 * src[ip1, j] + w_p2 * src[ip2, j])
    return -1


# ---------------------------------------------------------------------------
# band resets for the per-system baselines

@_jit
def broadcast_bands3(s0, s1, s2, t0, t1, t2, j0, j1):
    n = s0.shape[0]
    for i in range(n):
        v0 = s0[i]
        v1 = s1[i]
        v2 = s2[i]
        for j in range(j0, j1):
            t0[i, j] = v0
            t1[i, j] = v1
            t2[i, j] = v2
    return -1
