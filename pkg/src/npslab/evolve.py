"""Time-dependent two-species electrodiffusion coupled to Stokes flow on a 2D
periodic strip (0, L) x T, with monitors for the maximum principle, the
absorbing concentration band, relative-entropy/energy decay, and the two
functional inequalities behind the decay estimate.

Discretization
--------------
Cell-centered concentrations and potential on an nx-by-ny grid; MAC-staggered
velocity (ux on x-faces, uy on y-faces).  One IMEX step advances:

  1. Poisson solve  -eps Lap(phi) = c1 - c2, Dirichlet (-V, 0) in x,
     periodic in y (FFT in y + tridiagonal solves in x);
  2. concentration update: exponential-fitted (Scharfetter-Gummel)
     drift-diffusion treated implicitly (backward Euler, M-matrix, so the
     discrete maximum principle holds), upwind advection explicit;
  3. Stokes update: implicit viscous solve with explicit force -K rho grad(phi),
     then pressure projection to discrete divergence-free with no-slip walls.

The entropy/energy monitors are measured against a 1D steady profile computed
with the *same* cell-centered exponential-fitted operators, extended constant
in y; that profile is an exact fixed point of the discrete step, so the free
energy decays to rounding level rather than stalling at truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._linalg import thomas
from .core import (Z1, Z2, PhysParams, StripBC, StripState2D,
                   ValidationError, entropy_density)


class CFLError(RuntimeError):
    """Time step too large for the explicit terms; carries the admissible dt."""

    def __init__(self, msg, admissible_dt):
        super().__init__(msg)
        self.admissible_dt = admissible_dt


@dataclass(frozen=True)
class Sources:
    """Optional manufactured source terms, each a callable (x, y, t) -> array.

    ``c1``/``c2`` feed the two concentration equations (evaluated at cell
    centers); ``fx``/``fy`` add body force on interior x-faces / y-faces.
    """

    c1: object = None
    c2: object = None
    fx: object = None
    fy: object = None


@dataclass(frozen=True)
class EvolveConfig:
    """Simulation setup: physics, boundary data, grid, stepping, and the
    initial-condition descriptor (constant | linear-ramp | random-bounded |
    file)."""

    params: PhysParams
    bc: StripBC
    nx: int
    ny: int
    dt: float
    t_end: float
    output_every: int = 1
    initial: str = "linear-ramp"
    initial_lo: float | None = None
    initial_hi: float | None = None
    seed: int | None = None
    initial_file: str | None = None
    advect_velocity: bool = False   # include u . grad u (off: pure Stokes)
    sources: Sources | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError("dt must be > 0")
        if self.t_end < self.dt:
            raise ValidationError("t_end must be >= dt")
        if self.nx < 8 or self.ny < 8:
            raise ValidationError("grid sizes must be >= 8")
        if self.output_every < 1:
            raise ValidationError("output_every must be >= 1")
        if self.initial not in ("constant", "linear-ramp", "random-bounded", "file"):
            raise ValidationError(f"unknown initial-condition kind {self.initial!r}")
        if self.initial == "file" and not self.initial_file:
            raise ValidationError("initial 'file' requires initial_file")


@dataclass(frozen=True)
class DiagnosticsRow:
    """One sampled row of the theorem monitors."""

    time: float
    m_hi: float          # max over species of sup c_i (domain and boundary)
    m_lo: float          # min over species of inf c_i
    entropy1: float      # int c1* psi(c1/c1*)
    entropy2: float
    grad_phi_err: float  # || grad(phi - phi*) ||_{L2}^2
    kinetic: float       # || u ||_{L2}^2
    energy_e: float      # entropy1 + entropy2 + (eps/2) grad_phi_err
    energy_f: float      # energy_e + kinetic / K
    dissipation: float   # sum_i (D_i/2) int c_i |grad(mu_i - mu_i*)|^2

FIELDS = ("time", "m_hi", "m_lo", "entropy1", "entropy2", "grad_phi_err",
          "kinetic", "energy_e", "energy_f", "dissipation")


def bernoulli(x):
    """B(x) = x / (e^x - 1), the exponential-fitting weight.

    Series for small |x| avoids 0/0; the argument is clipped to +-500 so the
    asymptotes (B -> -x for x -> -inf, B -> 0 for x -> +inf) are kept without
    overflow.
    """
    x = np.clip(np.asarray(x, dtype=float), -500.0, 500.0)
    small = np.abs(x) < 1e-5
    safe = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        out = np.where(small, 1.0 - x / 2.0 + x * x / 12.0, safe / np.expm1(safe))
    return out


# ----------------------------------------------------------------------------
# spectral-in-y / tridiagonal-in-x elliptic solves
# ----------------------------------------------------------------------------

class _StripOperators:
    """FFT-diagonalized solvers on the strip for Poisson, Helmholtz, and the
    pressure projection.  y is periodic with period 1; x has nx cells on
    (0, L)."""

    def __init__(self, nx, ny, length):
        self.nx, self.ny, self.length = nx, ny, length
        self.dx = length / nx
        self.dy = 1.0 / ny
        self.xc = (np.arange(nx) + 0.5) * self.dx       # cell centers
        self.xf = np.arange(nx + 1) * self.dx           # x-face coordinates
        self.yc = (np.arange(ny) + 0.5) * self.dy
        self.yf = np.arange(ny) * self.dy
        m = np.arange(ny // 2 + 1)
        #: eigenvalues of -Lap_y on the periodic y-grid, one per rfft mode
        self.lam = (2.0 - 2.0 * np.cos(2.0 * np.pi * m / ny)) / self.dy**2

    def _solve_modes(self, lower, diag, upper, rhs_hat):
        """Tridiagonal solve for every y-mode; diagonals are real, the
        right-hand side complex (batched over real and imaginary parts)."""
        re = thomas(lower, diag, upper, rhs_hat.real)
        im = thomas(lower, diag, upper, rhs_hat.imag)
        return re + 1j * im

    def _xmode_solve(self, rhs, diag_builder):
        """Common pattern: rfft in y, per-mode Thomas in x, irfft back.
        ``diag_builder(lam_m)`` returns (lower, diag, upper) row arrays of
        length matching rhs's x-dimension."""
        nxr = rhs.shape[0]
        rhat = np.fft.rfft(rhs, axis=1).T          # (modes, nxr)
        lower = np.empty((self.lam.size, nxr))
        diag = np.empty_like(lower)
        upper = np.empty_like(lower)
        for k, lam in enumerate(self.lam):
            lower[k], diag[k], upper[k] = diag_builder(lam)
        out = self._solve_modes(lower, diag, upper, rhat)
        return np.fft.irfft(out.T, n=self.ny, axis=1)

    def poisson_dirichlet(self, rhs, left, right):
        """Solve -Lap(phi) = rhs with phi = left/right on the x-walls (ghost
        cells), periodic in y.  ``left``/``right`` are constants."""
        dx2 = self.dx**2
        f = rhs.copy()
        f[0, :] += 2.0 * left / dx2
        f[-1, :] += 2.0 * right / dx2

        def build(lam):
            lo = np.full(self.nx, -1.0 / dx2)
            up = np.full(self.nx, -1.0 / dx2)
            di = np.full(self.nx, 2.0 / dx2 + lam)
            di[0] = di[-1] = 3.0 / dx2 + lam
            lo[0] = up[-1] = 0.0
            return lo, di, up

        return self._xmode_solve(f, build)

    def helmholtz_center(self, rhs, sigma, coef):
        """Solve (sigma - coef*Lap) u = rhs for a cell-centered field with
        homogeneous Dirichlet walls via ghost reflection (tangential
        velocity)."""
        dx2 = self.dx**2

        def build(lam):
            lo = np.full(self.nx, -coef / dx2)
            up = np.full(self.nx, -coef / dx2)
            di = np.full(self.nx, sigma + coef * (2.0 / dx2 + lam))
            di[0] = di[-1] = sigma + coef * (3.0 / dx2 + lam)
            lo[0] = up[-1] = 0.0
            return lo, di, up

        return self._xmode_solve(rhs, build)

    def helmholtz_xface(self, rhs, sigma, coef):
        """Same Helmholtz solve for the interior x-face field (normal
        velocity), hard zeros on the wall faces.  ``rhs`` has shape
        (nx-1, ny) for the interior faces."""
        dx2 = self.dx**2
        n = self.nx - 1

        def build(lam):
            lo = np.full(n, -coef / dx2)
            up = np.full(n, -coef / dx2)
            di = np.full(n, sigma + coef * (2.0 / dx2 + lam))
            lo[0] = up[-1] = 0.0
            return lo, di, up

        return self._xmode_solve(rhs, build)

    def pressure_poisson(self, rhs):
        """Solve -Lap(p) = rhs, homogeneous Neumann in x, periodic in y.

        The (m = 0, constant-in-y) block is singular with a compatible
        right-hand side (discrete divergence sums to zero because the wall
        normal velocity vanishes); it is solved with the last cell pinned to
        zero, which fixes the free constant.
        """
        dx2 = self.dx**2
        rhat = np.fft.rfft(rhs, axis=1).T
        out = np.empty_like(rhat)

        # m = 0: reduced Neumann system with p[nx-1] = 0
        n = self.nx
        lo = np.full(n - 1, -1.0 / dx2)
        up = np.full(n - 1, -1.0 / dx2)
        di = np.full(n - 1, 2.0 / dx2)
        di[0] = 1.0 / dx2
        lo[0] = up[-1] = 0.0
        p0 = thomas(lo, di, up, rhat[0, :-1].real)
        out[0] = np.concatenate((p0, [0.0]))

        if self.lam.size > 1:
            nm = self.lam.size - 1
            lo = np.full((nm, n), -1.0 / dx2)
            up = np.full((nm, n), -1.0 / dx2)
            di = 2.0 / dx2 + self.lam[1:, None] + np.zeros((nm, n))
            di[:, 0] -= 1.0 / dx2
            di[:, -1] -= 1.0 / dx2
            lo[:, 0] = 0.0
            up[:, -1] = 0.0
            out[1:] = self._solve_modes(lo, di, up, rhat[1:])
        return np.fft.irfft(out.T, n=self.ny, axis=1)


def _grad_sq(q, ops, wall_values=(0.0, 0.0)):
    """|| grad q ||^2 for a cell-centered field with known wall traces:
    face-gradient quadrature, half spacing at the walls, periodic in y."""
    dx, dy = ops.dx, ops.dy
    cell = dx * dy
    gx = np.diff(q, axis=0) / dx
    total = float((gx * gx).sum() * cell)
    g0 = (q[0] - wall_values[0]) / (0.5 * dx)
    g1 = (wall_values[1] - q[-1]) / (0.5 * dx)
    total += float((g0 * g0).sum() + (g1 * g1).sum()) * (0.5 * dx * dy)
    gy = (q - np.roll(q, 1, axis=1)) / dy
    total += float((gy * gy).sum() * cell)
    return total


def _weighted_grad_sq(q, weight, ops, wall_q, wall_w):
    """int weight |grad q|^2 with arithmetic face means of the weight and
    prescribed wall traces of both fields."""
    dx, dy = ops.dx, ops.dy
    cell = dx * dy
    wx = 0.5 * (weight[:-1] + weight[1:])
    gx = np.diff(q, axis=0) / dx
    total = float((wx * gx * gx).sum() * cell)
    w0 = 0.5 * (wall_w[0] + weight[0])
    g0 = (q[0] - wall_q[0]) / (0.5 * dx)
    w1 = 0.5 * (weight[-1] + wall_w[1])
    g1 = (wall_q[1] - q[-1]) / (0.5 * dx)
    total += float((w0 * g0 * g0).sum() + (w1 * g1 * g1).sum()) * (0.5 * dx * dy)
    wy = 0.5 * (weight + np.roll(weight, 1, axis=1))
    gy = (q - np.roll(q, 1, axis=1)) / dy
    total += float((wy * gy * gy).sum() * cell)
    return total


# ----------------------------------------------------------------------------
# cell-centered steady reference (same exponential-fitted x-operators)
# ----------------------------------------------------------------------------

def steady_reference(params: PhysParams, bc: StripBC, nx: int,
                     tol: float = 1e-13, max_outer: int = 400):
    """1D steady profiles on the cell-centered x-grid, solved with exactly the
    face fluxes of the 2D stepper, so the returned (c1, c2, phi) extended
    constant in y is a fixed point of the discrete step with u = 0.

    Returns (c1, c2, phi, j1, j2) with arrays of shape (nx,).
    """
    dx = bc.length / nx
    spacing = np.concatenate(([0.5 * dx], np.full(nx - 1, dx), [0.5 * dx]))
    wall = (-bc.voltage, 0.0)
    phi = -bc.voltage * (1.0 - (np.arange(nx) + 0.5) / nx)

    def eta_step(phi, z, left, right):
        # face integrals of e^{z phi} with piecewise-linear potential:
        # s * e^{z phi_P} / B(theta), theta = z (phi_Q - phi_P)
        pots = np.concatenate(([wall[0]], phi, [wall[1]]))
        theta = z * np.diff(pots)
        w = spacing * np.exp(z * pots[:-1]) / bernoulli(theta)
        j = (left - right) / w.sum()
        eta = left - j * np.cumsum(w[:-1])
        return eta, j

    e1l, e1r = bc.alpha1 * math.exp(Z1 * wall[0]), bc.beta1
    e2l, e2r = bc.alpha2 * math.exp(Z2 * wall[0]), bc.beta2

    dx2 = dx * dx
    lo = np.full(nx, -1.0 / dx2)
    up = np.full(nx, -1.0 / dx2)
    base = np.full(nx, 2.0 / dx2)
    base[0] = base[-1] = 3.0 / dx2
    lo[0] = up[-1] = 0.0
    bdry = np.zeros(nx)
    bdry[0] = 2.0 * wall[0] / dx2
    bdry[-1] = 2.0 * wall[1] / dx2

    for _ in range(max_outer):
        eta1, j1 = eta_step(phi, Z1, e1l, e1r)
        eta2, j2 = eta_step(phi, Z2, e2l, e2r)
        # Newton for eps*(-Lap phi) = eta1 e^{-phi} - eta2 e^{phi} + eps*walls
        p = phi.copy()
        for _ in range(60):
            lap = base * p
            lap[:-1] += up[:-1] * p[1:]
            lap[1:] += lo[1:] * p[:-1]
            r = params.eps * (lap - bdry) - eta1 * np.exp(-p) + eta2 * np.exp(p)
            if np.max(np.abs(r)) < 1e-13 * max(1.0, np.max(np.abs(eta1 + eta2))):
                break
            jd = params.eps * base + eta1 * np.exp(-p) + eta2 * np.exp(p)
            p = p + thomas(params.eps * lo, jd, params.eps * up, -r)
        change = np.max(np.abs(p - phi))
        phi = p
        if change < tol:
            break
    else:
        raise RuntimeError("steady reference iteration did not converge")

    eta1, j1 = eta_step(phi, Z1, e1l, e1r)
    eta2, j2 = eta_step(phi, Z2, e2l, e2r)
    c1 = eta1 * np.exp(-Z1 * phi)
    c2 = eta2 * np.exp(-Z2 * phi)
    return c1, c2, phi, float(j1), float(j2)


# ----------------------------------------------------------------------------
# the simulator
# ----------------------------------------------------------------------------

class StripSimulator:
    """Holds the grid operators, the steady reference, and per-species sparse
    transport matrices rebuilt each step from the current potential."""

    def __init__(self, config: EvolveConfig):
        self.config = config
        p, bc = config.params, config.bc
        self.ops = _StripOperators(config.nx, config.ny, bc.length)
        c1s, c2s, phis, j1, j2 = steady_reference(p, bc, config.nx)
        self.ref_c1 = c1s[:, None]
        self.ref_c2 = c2s[:, None]
        self.ref_phi = phis[:, None]
        self.ref_j = (j1, j2)
        self.ref_mu1 = np.log(self.ref_c1) + Z1 * self.ref_phi
        self.ref_mu2 = np.log(self.ref_c2) + Z2 * self.ref_phi
        self.last_wall_flux = (0.0, 0.0)

    # -- initial conditions ---------------------------------------------------

    def initial_state(self) -> StripState2D:
        cfg = self.config
        bc = cfg.bc
        nx, ny = cfg.nx, cfg.ny
        kind = cfg.initial
        if kind == "constant":
            c1 = np.full((nx, ny), 0.5 * (bc.alpha1 + bc.beta1))
            c2 = np.full((nx, ny), 0.5 * (bc.alpha2 + bc.beta2))
        elif kind == "linear-ramp":
            r = (self.ops.xc / bc.length)[:, None]
            c1 = (bc.alpha1 + (bc.beta1 - bc.alpha1) * r) * np.ones((1, ny))
            c2 = (bc.alpha2 + (bc.beta2 - bc.alpha2) * r) * np.ones((1, ny))
        elif kind == "random-bounded":
            lo = bc.gamma_lo if cfg.initial_lo is None else cfg.initial_lo
            hi = bc.gamma_hi if cfg.initial_hi is None else cfg.initial_hi
            if not 0.0 < lo <= hi:
                raise ValidationError("random-bounded needs 0 < lo <= hi")
            rng = np.random.default_rng(cfg.seed)
            c1 = rng.uniform(lo, hi, size=(nx, ny))
            c2 = rng.uniform(lo, hi, size=(nx, ny))
        else:  # file
            c1, c2 = _read_concentrations(cfg.initial_file, nx, ny)
        phi = self.poisson(c1 - c2)
        return StripState2D(length=bc.length, c1=c1, c2=c2, phi=phi,
                            ux=np.zeros((nx + 1, ny)), uy=np.zeros((nx, ny)),
                            pressure=np.zeros((nx, ny)), time=0.0)

    def reference_state(self) -> StripState2D:
        """The steady reference extended constant in y; an exact fixed point."""
        nx, ny = self.config.nx, self.config.ny
        one = np.ones((1, ny))
        return StripState2D(length=self.config.bc.length,
                            c1=self.ref_c1 * one, c2=self.ref_c2 * one,
                            phi=self.ref_phi * one,
                            ux=np.zeros((nx + 1, ny)), uy=np.zeros((nx, ny)),
                            pressure=np.zeros((nx, ny)), time=0.0)

    # -- elementary solves ----------------------------------------------------

    def poisson(self, rho):
        """Potential from charge: -eps Lap(phi) = rho with the wall values."""
        bc = self.config.bc
        return self.ops.poisson_dirichlet(rho / self.config.params.eps,
                                          -bc.voltage, 0.0)

    # -- stability ------------------------------------------------------------

    def admissible_dt(self, state: StripState2D, phi=None) -> float:
        """Largest dt allowed for the explicit terms at this state: the
        advection/drift transport bound (half the cell-crossing time at speed
        |u| + max_i D_i |grad phi|) and the lagged-coupling bound
        eps / (2 max_i D_i max c) that keeps the frozen-potential step inside
        the maximum-principle band."""
        p = self.config.params
        dmax = max(p.d1, p.d2)
        ops = self.ops
        if phi is None:
            phi = self.poisson(state.c1 - state.c2)
        gx = np.abs(np.diff(phi, axis=0)) / ops.dx
        gy = np.abs(phi - np.roll(phi, 1, axis=1)) / ops.dy
        wall0 = np.abs(phi[0] - (-self.config.bc.voltage)) / (0.5 * ops.dx)
        wall1 = np.abs(phi[-1] - 0.0) / (0.5 * ops.dx)
        speed_x = np.abs(state.ux).max() + dmax * max(
            gx.max() if gx.size else 0.0, wall0.max(), wall1.max())
        speed_y = np.abs(state.uy).max() + dmax * gy.max()
        bounds = [0.5 * ops.dx / speed_x if speed_x > 0 else np.inf,
                  0.5 * ops.dy / speed_y if speed_y > 0 else np.inf]
        cmax = max(state.c1.max(), state.c2.max(),
                   self.config.bc.gamma_hi)
        bounds.append(0.5 * p.eps / (dmax * cmax))
        return float(min(bounds))

    # -- transport ------------------------------------------------------------

    def _transport_matrix(self, phi, z, d):
        """Backward-Euler matrix I/dt + div F(., phi) for one species and the
        boundary contribution vector, using exponential-fitted face fluxes.

        Flux through a face from cell P to cell Q at spacing s:
        F = (d/s) (B(theta) c_P - B(-theta) c_Q), theta = z (phi_Q - phi_P).
        The wall faces use the half spacing dx/2 and move the Dirichlet value
        to the right-hand side.
        """
        cfg = self.config
        nx, ny = cfg.nx, cfg.ny
        dx, dy = self.ops.dx, self.ops.dy
        idx = np.arange(nx * ny).reshape(nx, ny)

        rows, cols, vals = [], [], []
        diag = np.full((nx, ny), 1.0 / cfg.dt)
        rhs_b = np.zeros((nx, ny))

        # interior x-faces
        theta = z * np.diff(phi, axis=0)               # (nx-1, ny)
        bp, bm = bernoulli(theta), bernoulli(-theta)
        coef = d / (dx * dx)
        # divergence row of cell i gains +F_{i+1/2}/dx - F_{i-1/2}/dx
        diag[:-1] += coef * bp
        diag[1:] += coef * bm
        rows.append(idx[:-1].ravel()); cols.append(idx[1:].ravel())
        vals.append(np.broadcast_to(-coef * bm, theta.shape).ravel())
        rows.append(idx[1:].ravel()); cols.append(idx[:-1].ravel())
        vals.append(np.broadcast_to(-coef * bp, theta.shape).ravel())

        # wall faces (half spacing)
        bcv = cfg.bc
        wl, wr = -bcv.voltage, 0.0
        cl = {Z1: bcv.alpha1, Z2: bcv.alpha2}[z]
        cr = {Z1: bcv.beta1, Z2: bcv.beta2}[z]
        th0 = z * (phi[0] - wl)                        # wall -> first cell
        wcoef = 2.0 * d / (dx * dx)
        diag[0] += wcoef * bernoulli(-th0)
        rhs_b[0] += wcoef * bernoulli(th0) * cl
        thl = z * (wr - phi[-1])                       # last cell -> wall
        diag[-1] += wcoef * bernoulli(thl)
        rhs_b[-1] += wcoef * bernoulli(-thl) * cr

        # periodic y-faces: face j sits between cells j-1 and j
        thy = z * (phi - np.roll(phi, 1, axis=1))      # (nx, ny)
        bpy, bmy = bernoulli(thy), bernoulli(-thy)
        coefy = d / (dy * dy)
        prev = np.roll(idx, 1, axis=1)
        diag += coefy * np.roll(bpy, -1, axis=1)       # outgoing through face j+1
        diag += coefy * bmy                            # outgoing through face j
        rows.append(idx.ravel()); cols.append(np.roll(idx, -1, axis=1).ravel())
        vals.append((-coefy * np.roll(bmy, -1, axis=1)).ravel())
        rows.append(idx.ravel()); cols.append(prev.ravel())
        vals.append((-coefy * bpy).ravel())

        rows.append(idx.ravel()); cols.append(idx.ravel()); vals.append(diag.ravel())
        a = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nx * ny, nx * ny))
        return a, rhs_b

    def _advection(self, c, ux, uy):
        """Explicit first-order upwind div(u c); wall faces carry no flux."""
        dx, dy = self.ops.dx, self.ops.dy
        # x-faces: interior only (wall normal velocity is zero)
        ui = ux[1:-1]
        up = np.where(ui > 0, c[:-1], c[1:])
        fx = np.zeros_like(ux)
        fx[1:-1] = ui * up
        # y-faces: periodic, face j between cells j-1 and j
        cw = np.where(uy > 0, np.roll(c, 1, axis=1), c)
        fy = uy * cw
        return np.diff(fx, axis=0) / dx + (np.roll(fy, -1, axis=1) - fy) / dy

    def _wall_flux_total(self, c, phi, z, d):
        """Net inflow through both walls (per unit time), quadrature in y."""
        cfg = self.config
        dx, dy = self.ops.dx, self.ops.dy
        bcv = cfg.bc
        wl, wr = -bcv.voltage, 0.0
        cl = {Z1: bcv.alpha1, Z2: bcv.alpha2}[z]
        cr = {Z1: bcv.beta1, Z2: bcv.beta2}[z]
        s = 0.5 * dx
        th0 = z * (phi[0] - wl)
        fin = (d / s) * (bernoulli(th0) * cl - bernoulli(-th0) * c[0])
        thl = z * (wr - phi[-1])
        fout = (d / s) * (bernoulli(thl) * c[-1] - bernoulli(-thl) * cr)
        return float((fin - fout).sum() * dy)

    # -- Stokes ---------------------------------------------------------------

    def _force(self, rho, phi, t):
        """-K rho grad(phi) on the staggered faces (interior x-faces, all
        y-faces), plus any manufactured body force."""
        k = self.config.params.coupling
        dx, dy = self.ops.dx, self.ops.dy
        rho_xf = 0.5 * (rho[:-1] + rho[1:])
        fx = -k * rho_xf * np.diff(phi, axis=0) / dx
        rho_yf = 0.5 * (rho + np.roll(rho, 1, axis=1))
        fy = -k * rho_yf * (phi - np.roll(phi, 1, axis=1)) / dy
        src = self.config.sources
        if src is not None:
            if src.fx is not None:
                fx = fx + src.fx(self.ops.xf[1:-1][:, None], self.ops.yc[None, :], t)
            if src.fy is not None:
                fy = fy + src.fy(self.ops.xc[:, None], self.ops.yf[None, :], t)
        return fx, fy

    def _advect_velocity(self, ux, uy):
        """Optional u . grad u by upwinding each component along itself
        (exploration only; no monitor claims are made with this on)."""
        dx, dy = self.ops.dx, self.ops.dy
        ui = ux[1:-1]
        dudx = np.where(ui > 0, (ui - ux[:-2]) / dx, (ux[2:] - ui) / dx)
        uy_at_xf = 0.25 * (uy[:-1] + uy[1:]
                           + np.roll(uy, -1, axis=1)[:-1] + np.roll(uy, -1, axis=1)[1:])
        dudy = np.where(uy_at_xf > 0,
                        (ui - np.roll(ui, 1, axis=1)) / dy,
                        (np.roll(ui, -1, axis=1) - ui) / dy)
        ax = ui * dudx + uy_at_xf * dudy

        dvdy = np.where(uy > 0, (uy - np.roll(uy, 1, axis=1)) / dy,
                        (np.roll(uy, -1, axis=1) - uy) / dy)
        ux_at_yf = 0.25 * (ux[:-1] + ux[1:]
                           + np.roll(ux[:-1], 1, axis=1) + np.roll(ux[1:], 1, axis=1))
        ghost_lo = np.vstack([-uy[0], uy[:-1]])        # no-slip reflection
        ghost_hi = np.vstack([uy[1:], -uy[-1]])
        dvdx = np.where(ux_at_yf > 0, (uy - ghost_lo) / dx, (ghost_hi - uy) / dx)
        ay = ux_at_yf * dvdx + uy * dvdy
        return ax, ay

    def _stokes_step(self, state, rho, phi):
        cfg = self.config
        nu, dt = cfg.params.nu, cfg.dt
        fx, fy = self._force(rho, phi, state.time)
        rx = state.ux[1:-1] / dt + fx
        ry = state.uy / dt + fy
        if cfg.advect_velocity:
            ax, ay = self._advect_velocity(state.ux, state.uy)
            rx -= ax
            ry -= ay
        ux_star = np.zeros_like(state.ux)
        ux_star[1:-1] = self.ops.helmholtz_xface(rx, 1.0 / dt, nu)
        uy_star = self.ops.helmholtz_center(ry, 1.0 / dt, nu)

        div = np.diff(ux_star, axis=0) / self.ops.dx + (
            np.roll(uy_star, -1, axis=1) - uy_star) / self.ops.dy
        p = self.ops.pressure_poisson(-div / dt)
        ux = ux_star.copy()
        ux[1:-1] -= dt * np.diff(p, axis=0) / self.ops.dx
        uy = uy_star - dt * (p - np.roll(p, 1, axis=1)) / self.ops.dy
        return ux, uy, p

    # -- one step -------------------------------------------------------------

    def step(self, state: StripState2D) -> StripState2D:
        cfg = self.config
        dt = cfg.dt
        rho = state.c1 - state.c2
        phi = self.poisson(rho)

        adm = self.admissible_dt(state, phi)
        if dt > adm:
            raise CFLError(
                f"dt = {dt:g} exceeds the explicit-term stability bound; "
                f"admissible dt <= {adm:g} at t = {state.time:g}", adm)

        t = state.time
        xs, ys = self.ops.xc[:, None], self.ops.yc[None, :]
        new_c = []
        for c, z, d, s in ((state.c1, Z1, cfg.params.d1,
                            cfg.sources.c1 if cfg.sources else None),
                           (state.c2, Z2, cfg.params.d2,
                            cfg.sources.c2 if cfg.sources else None)):
            a, rhs_b = self._transport_matrix(phi, z, d)
            rhs = c / dt - self._advection(c, state.ux, state.uy) + rhs_b
            if s is not None:
                rhs = rhs + s(xs, ys, t)
            sol = spla.splu(a).solve(rhs.ravel()).reshape(c.shape)
            new_c.append(sol)
        c1n, c2n = new_c

        self.last_wall_flux = (
            self._wall_flux_total(c1n, phi, Z1, cfg.params.d1),
            self._wall_flux_total(c2n, phi, Z2, cfg.params.d2),
        )

        ux, uy, p = self._stokes_step(state, rho, phi)
        phi_n = self.poisson(c1n - c2n)
        return StripState2D(length=state.length, c1=c1n, c2=c2n, phi=phi_n,
                            ux=ux, uy=uy, pressure=p, time=t + dt)

    # -- diagnostics ----------------------------------------------------------

    def dissipation(self, state: StripState2D, expanded: bool = False) -> float:
        """sum_i (D_i/2) int c_i |grad(mu_i - mu_i*)|^2.

        With ``expanded`` the face differences are assembled from the
        log-concentration and potential pieces separately; the two evaluations
        agree to rounding and serve as a consistency check.
        """
        cfg = self.config
        bcv = cfg.bc
        total = 0.0
        pieces = (
            (cfg.params.d1, state.c1, Z1, self.ref_mu1, (bcv.alpha1, bcv.beta1)),
            (cfg.params.d2, state.c2, Z2, self.ref_mu2, (bcv.alpha2, bcv.beta2)),
        )
        for d, c, z, mu_ref, (ca, cb) in pieces:
            if expanded:
                m = (np.log(c) - np.log(self.ref_c1 if z == Z1 else self.ref_c2)) \
                    + z * (state.phi - self.ref_phi)
            else:
                m = (np.log(c) + z * state.phi) - mu_ref
            # boundary traces of mu - mu* vanish (same Dirichlet data)
            total += 0.5 * d * _weighted_grad_sq(
                m, c, self.ops, (np.zeros(cfg.ny), np.zeros(cfg.ny)), (ca, cb))
        return total

    def diagnostics(self, state: StripState2D) -> DiagnosticsRow:
        cfg = self.config
        bcv = cfg.bc
        cell = self.ops.dx * self.ops.dy
        m_hi = max(state.c1.max(), state.c2.max(), bcv.gamma_hi)
        m_lo = min(state.c1.min(), state.c2.min(), bcv.gamma_lo)

        e1 = float((self.ref_c1 * entropy_density(state.c1 / self.ref_c1)).sum() * cell)
        e2 = float((self.ref_c2 * entropy_density(state.c2 / self.ref_c2)).sum() * cell)
        gerr = _grad_sq(state.phi - self.ref_phi, self.ops)
        kin = float((state.ux[1:-1] ** 2).sum() * cell
                    + (state.uy ** 2).sum() * cell)
        ee = e1 + e2 + 0.5 * cfg.params.eps * gerr
        return DiagnosticsRow(
            time=state.time, m_hi=float(m_hi), m_lo=float(m_lo),
            entropy1=e1, entropy2=e2, grad_phi_err=gerr, kinetic=kin,
            energy_e=ee, energy_f=ee + kin / cfg.params.coupling,
            dissipation=self.dissipation(state),
        )

    def divergence(self, state: StripState2D):
        """Discrete divergence of the staggered velocity (machine-zero after
        projection)."""
        return (np.diff(state.ux, axis=0) / self.ops.dx
                + (np.roll(state.uy, -1, axis=1) - state.uy) / self.ops.dy)


def _read_concentrations(path, nx, ny):
    """Read c1, c2 from a field snapshot written by the CLI (columnar text,
    one-line header)."""
    with open(path) as fh:
        header = fh.readline().split()
        data = np.loadtxt(fh)
    meta = dict(zip(header[::2], header[1::2])) if len(header) >= 2 else {}
    fnx = int(meta.get("nx", nx))
    fny = int(meta.get("ny", ny))
    if (fnx, fny) != (nx, ny):
        raise ValidationError(
            f"snapshot grid {fnx}x{fny} does not match configured {nx}x{ny}")
    if data.shape[0] != nx * ny or data.shape[1] < 4:
        raise ValidationError("snapshot does not contain x y c1 c2 columns")
    c1 = data[:, 2].reshape(nx, ny)
    c2 = data[:, 3].reshape(nx, ny)
    if np.any(c1 <= 0) or np.any(c2 <= 0):
        raise ValidationError("snapshot concentrations must be positive")
    return c1, c2


@lru_cache(maxsize=8)
def _simulator(config: EvolveConfig) -> StripSimulator:
    return StripSimulator(config)


def step(state: StripState2D, config: EvolveConfig) -> StripState2D:
    """Advance one IMEX step (module-level convenience over StripSimulator)."""
    return _simulator(config).step(state)


def run(config: EvolveConfig, state: StripState2D | None = None):
    """Run to t_end, sampling diagnostics every ``output_every`` steps
    (always including t = 0 and the final state).

    Returns (series, final_state) with series a list of DiagnosticsRow.
    """
    sim = _simulator(config)
    if state is None:
        state = sim.initial_state()
    series = [sim.diagnostics(state)]
    nsteps = int(round(config.t_end / config.dt))
    for k in range(1, nsteps + 1):
        state = sim.step(state)
        if k % config.output_every == 0 or k == nsteps:
            series.append(sim.diagnostics(state))
    return series, state


# ----------------------------------------------------------------------------
# theorem monitors on series and fields
# ----------------------------------------------------------------------------

def decay_fit(series, kappa_delta, t_start):
    """Least-squares decay rate of log F over [t_start, inf) and certification
    of F(t) <= F(t_start) exp(-kappa_delta (t - t_start)) (1 + 1e-6).

    Returns (fitted_rate, certified).  A window with fewer than 10 samples
    raises ValueError; an identically-vanishing F certifies vacuously and the
    rate is reported as nan.
    """
    rows = [r for r in series if r.time >= t_start - 1e-12]
    if len(rows) < 10:
        raise ValueError(f"decay window has {len(rows)} samples; need >= 10")
    t = np.array([r.time for r in rows])
    f = np.array([r.energy_f for r in rows])
    f0, t0 = f[0], t[0]
    certified = bool(np.all(f <= f0 * np.exp(-kappa_delta * (t - t0)) * (1 + 1e-6)))
    floor = 1e-300
    if np.any(f <= floor):
        return float("nan"), certified
    slope = np.polyfit(t, np.log(f), 1)[0]
    return float(slope), certified


def entry_time(series, bc: StripBC, delta: float):
    """First sampled time after which both monitors stay inside the band
    [g_lo - delta, g_hi + delta]; None if never."""
    lo, hi = bc.gamma_lo - delta, bc.gamma_hi + delta
    t = None
    for r in series:
        if lo <= r.m_lo and r.m_hi <= hi:
            if t is None:
                t = r.time
        else:
            t = None
    return t


def entropy_inequality_check(f1, f2, g1, g2, params: PhysParams, bc: StripBC,
                             rtol: float = 1e-8):
    """Discrete log-Sobolev-type comparison between two positive field pairs
    with the same Dirichlet traces:

      (omega / L^2) ( sum_i 1/2 int g_i psi(f_i/g_i) + eps ||grad(pf - pg)||^2 )
          <= sum_i || grad(pi_i^f - pi_i^g) ||^2,

    omega = 2 / max(sup f_i, sup g_i), pi_i = log(field_i) + z_i * potential.

    Returns (lhs, rhs, holds).
    """
    for arr in (f1, f2, g1, g2):
        if np.any(np.asarray(arr) <= 0):
            raise ValidationError("fields must be strictly positive")
    shapes = {np.asarray(a).shape for a in (f1, f2, g1, g2)}
    if len(shapes) != 1:
        raise ValidationError("field shapes must match")
    nx, ny = next(iter(shapes))
    ops = _StripOperators(nx, ny, bc.length)
    cell = ops.dx * ops.dy

    big = max(np.max(f1), np.max(f2), np.max(g1), np.max(g2), bc.gamma_hi)
    omega = 2.0 / big

    # potential difference solves -eps Lap q = (f1-f2) - (g1-g2), zero traces
    q = ops.poisson_dirichlet(((f1 - f2) - (g1 - g2)) / params.eps, 0.0, 0.0)

    ent = 0.5 * float((g1 * entropy_density(f1 / g1)).sum() * cell)
    ent += 0.5 * float((g2 * entropy_density(f2 / g2)).sum() * cell)
    lhs = (omega / bc.length**2) * (ent + params.eps * _grad_sq(q, ops))

    rhs = 0.0
    for f, g, z in ((f1, g1, Z1), (f2, g2, Z2)):
        # traces of f and g match, so the boundary trace of the difference is 0
        pi_diff = (np.log(f) - np.log(g)) + z * q
        rhs += _grad_sq(pi_diff, ops)
    return lhs, rhs, bool(lhs <= rhs * (1.0 + rtol))


def interpolation_check(f, g, length: float):
    """Quadratic-entropy comparison int (f-g)^2 <= 2 max(sup f, sup g) int g psi(f/g)
    on the strip; returns (lhs, rhs, holds).

    The factor 2 is sharp: psi''(s) = 1/s gives psi(s) >= (s-1)^2 / (2 max(1, s))
    pointwise, with the ratio approaching 2 as s -> 1.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(f <= 0) or np.any(g <= 0):
        raise ValidationError("fields must be strictly positive")
    nx, ny = f.shape
    cell = (length / nx) * (1.0 / ny)
    lhs = float(((f - g) ** 2).sum() * cell)
    rhs = float(2.0 * max(f.max(), g.max()) * (g * entropy_density(f / g)).sum() * cell)
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-12))
