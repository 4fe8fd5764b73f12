"""Batched tridiagonal (Thomas) solves used by the 1D solver and the
line-implicit pieces of the 2D stepper."""

from __future__ import annotations

import numpy as np


def thomas(lower, diag, upper, rhs):
    """Solve tridiagonal systems by LU sweeps, vectorized over leading axes.

    All arguments broadcast over any number of leading batch dimensions; the
    last axis is the system dimension n.  ``lower`` and ``upper`` have length
    n with lower[..., 0] and upper[..., -1] ignored.  No pivoting: callers
    supply diagonally dominant systems.
    """
    a = np.asarray(lower, dtype=float)
    b = np.asarray(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.asarray(rhs, dtype=float)
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    n = b.shape[-1]

    cp = np.empty_like(b)
    dp = np.empty_like(b)
    cp[..., 0] = c[..., 0] / b[..., 0]
    dp[..., 0] = d[..., 0] / b[..., 0]
    for k in range(1, n):
        m = b[..., k] - a[..., k] * cp[..., k - 1]
        cp[..., k] = c[..., k] / m
        dp[..., k] = (d[..., k] - a[..., k] * dp[..., k - 1]) / m

    x = np.empty_like(b)
    x[..., -1] = dp[..., -1]
    for k in range(n - 2, -1, -1):
        x[..., k] = dp[..., k] - cp[..., k] * x[..., k + 1]
    return x
