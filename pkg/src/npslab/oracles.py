"""Independent cross-check solver for the steady 1D system.

Solves the same discrete equations as the production solver but by a single
monolithic Newton iteration on the stacked unknown vector [c1; c2; phi], with
a finite-difference dense Jacobian.  Nothing here is shared with the
production path beyond the grid and the residual *definition*, so nodewise
agreement between the two is a meaningful consistency check rather than a
tautology.  Intended for tests and the self-check command; dense linear
algebra limits it to modest grids.
"""

from __future__ import annotations

import numpy as np

from .core import Z1, Z2, Grid1D, PhysParams, SteadyState1D, StripBC
from .steady1d import ConvergenceError, _laplacian_tridiag


def _stacked_residual(u, grid, params, bc):
    n = grid.n
    c1, c2, phi = u[:n], u[n:2 * n], u[2 * n:]
    h = np.diff(grid.nodes)
    r = np.empty(3 * n)

    for off, c, z in ((0, c1, Z1), (n, c2, Z2)):
        eta = c * np.exp(z * phi)
        w = np.exp(z * phi)
        flux = np.diff(eta) / (0.5 * h * (w[:-1] + w[1:]))
        cell = 0.5 * (h[:-1] + h[1:])
        r[off + 1:off + n - 1] = np.diff(flux) / cell
    r[0] = c1[0] - bc.alpha1
    r[n - 1] = c1[-1] - bc.beta1
    r[n] = c2[0] - bc.alpha2
    r[2 * n - 1] = c2[-1] - bc.beta2

    lo, di, up = _laplacian_tridiag(grid)
    r[2 * n + 1:3 * n - 1] = params.eps * (lo * phi[:-2] + di * phi[1:-1] + up * phi[2:]) + (
        c1[1:-1] - c2[1:-1])
    r[2 * n] = phi[0] + bc.voltage
    r[3 * n - 1] = phi[-1]
    return r


def _fd_jacobian(u, grid, params, bc):
    n3 = u.size
    r0 = _stacked_residual(u, grid, params, bc)
    J = np.empty((n3, n3))
    for k in range(n3):
        du = 1e-7 * max(1.0, abs(u[k]))
        up = u.copy()
        up[k] += du
        J[:, k] = (_stacked_residual(up, grid, params, bc) - r0) / du
    return J, r0


def solve_steady_monolithic(
    params: PhysParams,
    bc: StripBC,
    grid: Grid1D,
    tol: float = 1e-11,
    max_iter: int = 60,
) -> SteadyState1D:
    """Damped Newton on the stacked discrete system; returns a SteadyState1D."""
    n = grid.n
    x = grid.nodes / grid.length
    u = np.concatenate([
        bc.alpha1 + (bc.beta1 - bc.alpha1) * x,
        bc.alpha2 + (bc.beta2 - bc.alpha2) * x,
        -bc.voltage * (1.0 - x),
    ])

    # Interior residual rows carry a 1/h^2 scale, so the attainable absolute
    # floor grows with the grid size; accept stagnation below tol relative to
    # that scale but keep iterating toward the absolute tolerance while the
    # line search still makes progress.
    rscale = max(1.0, float(np.min(np.diff(grid.nodes))) ** -2)
    rnorm = np.max(np.abs(_stacked_residual(u, grid, params, bc)))
    for _ in range(max_iter):
        if rnorm <= tol:
            break
        J, r = _fd_jacobian(u, grid, params, bc)
        du = np.linalg.solve(J, -r)
        step = 1.0
        for _ in range(40):
            trial = u + step * du
            if np.all(trial[:2 * n] > 0):
                rt = np.max(np.abs(_stacked_residual(trial, grid, params, bc)))
                if rt < rnorm:
                    u, rnorm = trial, rt
                    break
            step *= 0.5
        else:
            if rnorm <= tol * rscale:
                break
            raise ConvergenceError("monolithic Newton found no descent step")
    else:
        if rnorm > tol * rscale:
            raise ConvergenceError(f"monolithic Newton stalled at residual {rnorm:.3e}")

    c1, c2, phi = u[:n], u[n:2 * n], u[2 * n:]
    h = np.diff(grid.nodes)
    w1 = np.exp(Z1 * phi)
    w2 = np.exp(Z2 * phi)
    eta1 = c1 * w1
    eta2 = c2 * w2
    # flux through the first face equals the constant current
    j1 = float((eta1[1] - eta1[0]) / (0.5 * h[0] * (w1[0] + w1[1])))
    j2 = float((eta2[1] - eta2[0]) / (0.5 * h[0] * (w2[0] + w2[1])))
    return SteadyState1D(grid=grid, c1=c1, c2=c2, phi=phi, j1=j1, j2=j2)
