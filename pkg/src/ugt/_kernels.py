"""Compiled UGT loop for quadratic objectives.

Mirrors :func:`ugt.core.step` operation by operation; the generic numpy
engine stays the reference and the test-suite checks the two agree.
"""

import numpy as np
from numba import njit

DIVERGENCE_NORM = 1e12

STATUS_RUNNING = 0
STATUS_STOPPED = 1
STATUS_DIVERGED = 2


@njit(cache=True, nogil=True)
def _quad_grad(q2, c, x, out):
    n, m = x.shape
    for i in range(n):
        for a in range(m):
            s = c[i, a]
            for b in range(m):
                s += q2[i, a, b] * x[i, b]
            out[i, a] = s


@njit(cache=True, nogil=True)
def _fill_row(row, k, x, g, x_star, has_star, denom, alpha, qbar2, cbar):
    n, m = x.shape
    xbar = np.zeros(m)
    gbar = np.zeros(m)
    for i in range(n):
        for a in range(m):
            xbar[a] += x[i, a]
            gbar[a] += g[i, a]
    xbar /= n
    gbar /= n
    cons = 0.0
    track = 0.0
    gap = 0.0
    for i in range(n):
        for a in range(m):
            d = x[i, a] - xbar[a]
            cons += d * d
            d = g[i, a] - gbar[a]
            track += d * d
            if has_star:
                d = x[i, a] - x_star[a]
                gap += d * d
    opt = 0.0
    resid = 0.0
    for a in range(m):
        if has_star:
            d = xbar[a] - x_star[a]
            opt += d * d
        s = cbar[a]
        for b in range(m):
            s += qbar2[a, b] * xbar[b]
        d = gbar[a] - alpha * s
        resid += d * d
    row[0] = k
    if has_star:
        row[1] = np.sqrt(gap) / denom if denom > 0 else 0.0
        row[4] = np.sqrt(n) * np.sqrt(opt)
    else:
        row[1] = np.nan
        row[4] = np.nan
    row[2] = np.sqrt(cons)
    row[3] = np.sqrt(track)
    row[5] = np.sqrt(resid)


@njit(cache=True, nogil=True)
def ugt_quadratic_chunk(w1, w2, alpha, beta, atc, q2, c, qbar2, cbar, x_star, has_star,
                        denom, x, g, grad, k0, max_iters, stop_gap, record_first, out):
    """Advance in place from iteration ``k0``, one row per new iterate.

    With ``record_first`` the row of the starting iterate is written too.
    Returns ``(rows_written, status, k, norm)``; ``out`` caps the rows per
    call and ``stop_gap < 0`` disables the gap test.
    """
    new_grad = np.empty_like(grad)
    k = k0
    rows = 0
    cap = out.shape[0]
    if record_first:
        _fill_row(out[0], k, x, g, x_star, has_star, denom, alpha, qbar2, cbar)
        rows = 1
        if (has_star and stop_gap >= 0 and out[0, 1] <= stop_gap) or k >= max_iters:
            return rows, STATUS_STOPPED, k, 0.0
    while rows < cap:
        if atc:
            x_new = w1 @ (x - g)
            _quad_grad(q2, c, x_new, new_grad)
            g_new = w2 @ g + beta * (x - w2 @ x) + alpha * (new_grad - grad)
        else:
            wx = w1 @ x
            x_new = wx - g
            _quad_grad(q2, c, x_new, new_grad)
            g_new = w2 @ g + beta * (wx - w2 @ wx) + alpha * (new_grad - grad)
        k += 1
        worst = max(np.sqrt(np.sum(x_new * x_new)), np.sqrt(np.sum(g_new * g_new)))
        if not np.isfinite(worst) or worst > DIVERGENCE_NORM:
            return rows, STATUS_DIVERGED, k, worst
        x[:, :] = x_new
        g[:, :] = g_new
        grad[:, :] = new_grad
        _fill_row(out[rows], k, x, g, x_star, has_star, denom, alpha, qbar2, cbar)
        rows += 1
        if (has_star and stop_gap >= 0 and out[rows - 1, 1] <= stop_gap) or k >= max_iters:
            return rows, STATUS_STOPPED, k, 0.0
    return rows, STATUS_RUNNING, k, 0.0
