"""Executable acceptance suite: eleven quantitative checks covering solver
cross-validation, a-priori bounds, convergence orders, criterion algebra,
monitor monotonicity, decay certification, the functional inequalities, the
flow indicator, and CLI determinism.  Exposed through the ``selftest``
subcommand and the test suite; each criterion returns (passed, detail).
"""

from __future__ import annotations

import tempfile
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import cli, criteria, evolve, flowcheck, steady1d
from .core import Grid1D, PhysParams, StripBC
from .oracles import solve_steady_monolithic

_RNG_SUITE = 20240811


# ---------------------------------------------------------------------------
# shared fixtures (cached: several criteria reuse the same expensive runs)
# ---------------------------------------------------------------------------

def _random_problem(rng):
    params = PhysParams(d1=1.0, d2=1.0, eps=float(rng.uniform(0.05, 1.0)),
                        nu=1.0, coupling=1.0)
    conc = rng.uniform(0.5, 2.0, size=4)
    bc = StripBC(alpha1=conc[0], alpha2=conc[1], beta1=conc[2], beta2=conc[3],
                 voltage=float(rng.uniform(0.0, 2.0)), length=1.0)
    return params, bc


@lru_cache(maxsize=1)
def _steady_suite():
    """20 random problems solved by both steady solvers on n = 64 and 128."""
    rng = np.random.default_rng(_RNG_SUITE)
    rows = []
    for _ in range(20):
        params, bc = _random_problem(rng)
        for n in (64, 128):
            grid = Grid1D.uniform(n, bc.length)
            a = steady1d.solve_steady_1d(params, bc, grid)
            b = solve_steady_monolithic(params, bc, grid)
            diff = max(np.max(np.abs(a.c1 - b.c1)), np.max(np.abs(a.c2 - b.c2)),
                       np.max(np.abs(a.phi - b.phi)))
            rows.append({"params": params, "bc": bc, "n": n,
                         "state": a, "mismatch": float(diff)})
    return rows


_WEAK_PARAMS = PhysParams(d1=1.0, d2=1.0, eps=1.0, nu=1.0, coupling=1.0)
_WEAK_BC = StripBC(alpha1=1.0, alpha2=1.1, beta1=1.15, beta2=1.05,
                   voltage=0.1, length=1.0)


@lru_cache(maxsize=1)
def _weak_run():
    """64x32 strip run with random-bounded data inside the boundary hull."""
    cfg = evolve.EvolveConfig(params=_WEAK_PARAMS, bc=_WEAK_BC, nx=64, ny=32,
                              dt=0.01, t_end=1.5, output_every=5,
                              initial="random-bounded", seed=_RNG_SUITE)
    sim = evolve.StripSimulator(cfg)
    series, final = evolve.run(cfg)
    return cfg, sim, series, final


@lru_cache(maxsize=1)
def _spiked_run():
    """Same physics with initial data far outside the hull (spikes to 3x the
    largest boundary concentration)."""
    bc = _WEAK_BC
    cfg = evolve.EvolveConfig(params=_WEAK_PARAMS, bc=bc, nx=64, ny=32,
                              dt=0.002, t_end=6.0, output_every=50,
                              initial="random-bounded",
                              initial_lo=0.5 * bc.gamma_lo,
                              initial_hi=3.0 * bc.gamma_hi, seed=99)
    series, final = evolve.run(cfg)
    return cfg, series, final


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_1():
    """Steady-solver cross-validation against the monolithic Newton solver."""
    worst = max(r["mismatch"] for r in _steady_suite())
    return worst <= 1e-8, f"worst nodewise mismatch {worst:.3e} (<= 1e-8)"


def criterion_2():
    """A-priori box bounds hold on every converged steady solve."""
    worst = -np.inf
    for r in _steady_suite():
        rep = steady1d.check_bounds(r["state"], r["bc"])
        worst = max(worst, rep.max_violation)
    return worst <= 1e-8, f"worst bound violation {worst:.3e} (<= 1e-8)"


def criterion_3():
    """Pointwise-flux constancy improves at second order under refinement."""
    params = PhysParams(d1=1.0, d2=1.0, eps=0.3, nu=1.0, coupling=1.0)
    bc = StripBC(alpha1=1.2, alpha2=0.8, beta1=0.7, beta2=1.4,
                 voltage=1.0, length=1.0)
    errs, hs = [], []
    for n in (64, 128, 256):
        state = steady1d.solve_steady_1d(params, bc, Grid1D.uniform(n, 1.0))
        errs.append(max(steady1d.current_deviation(state)))
        hs.append(1.0 / (n - 1))
    order = float(np.log(errs[0] / errs[-1]) / np.log(hs[0] / hs[-1]))
    return order >= 1.9, f"observed order {order:.3f} (>= 1.9); deviations {errs}"


def criterion_4():
    """Zero-current equilibrium: vanishing currents, constant potentials."""
    v = 0.7
    bc = StripBC(alpha1=1.3, alpha2=0.9, beta1=1.3 * np.exp(-v),
                 beta2=0.9 * np.exp(v), voltage=v, length=1.0)
    params = PhysParams(d1=1.0, d2=1.0, eps=0.5, nu=1.0, coupling=1.0)
    state = steady1d.solve_steady_1d(params, bc, Grid1D.uniform(129, 1.0))
    mu1, mu2 = state.chemical_potentials()
    var = max(np.ptp(mu1), np.ptp(mu2))
    jmax = max(abs(state.j1), abs(state.j2))
    ok = jmax < 1e-10 and var < 1e-8
    return ok, f"|j| = {jmax:.3e} (< 1e-10), chemical-potential variation {var:.3e} (< 1e-8)"


def criterion_5():
    """Criterion algebra: sign equivalence and the closed-form identity."""
    rng = np.random.default_rng(7)
    worst_rel = 0.0
    for _ in range(100):
        params = PhysParams(d1=rng.uniform(0.3, 3), d2=rng.uniform(0.3, 3),
                            eps=1.0, nu=rng.uniform(0.3, 3),
                            coupling=rng.uniform(0.3, 3))
        conc = rng.uniform(0.3, 3.0, size=4)
        bc = StripBC(*conc, voltage=rng.uniform(0, 2), length=rng.uniform(0.5, 2))
        j1, j2 = rng.uniform(-1, 1, size=2)
        g1, g2 = criteria.criterion_constants(params, bc)
        m1, m2 = criteria.band_constants(params, bc, 0.0)
        k1, k2, k = criteria.decay_rate(params, bc, j1, j2, 0.0)
        # identity M_i(0) = G_i^2 D g_lo / g_hi ties the two formulations
        scale = params.d_min * bc.gamma_lo / bc.gamma_hi
        worst_rel = max(worst_rel,
                        abs(m1 - g1**2 * scale) / m1,
                        abs(m2 - g2**2 * scale) / m2)
        for kk, g, j in ((k1, g1, j1), (k2, g2, j2)):
            if (kk > 0) != (abs(j) * bc.length * g < criteria.THRESHOLD):
                return False, "sign equivalence violated"
        if k != min(k1, k2, params.nu / (2 * bc.length**2)):
            return False, "kappa is not the minimum of its three arguments"
    return worst_rel <= 1e-12, f"identity relative error {worst_rel:.3e} (<= 1e-12)"


def criterion_6():
    """Maximum-principle monitors and absorbing-band entry."""
    _, _, series, _ = _weak_run()
    hi = np.array([r.m_hi for r in series])
    lo = np.array([r.m_lo for r in series])
    mono = float(max(np.max(np.diff(hi), initial=-np.inf),
                     np.max(-np.diff(lo), initial=-np.inf)))
    if mono > 1e-8:
        return False, f"monitor monotonicity violated by {mono:.3e}"

    _, spiked, _ = _spiked_run()
    delta = 0.05 * _WEAK_BC.gamma_lo
    t = evolve.entry_time(spiked, _WEAK_BC, delta)
    ok = t is not None and t < 50.0
    return ok, (f"monotonicity slack {mono:.3e} (<= 1e-8); "
                f"band entry at t = {t} (< 50)")


def criterion_7():
    """Free-energy monotonicity and certified exponential decay."""
    cfg, sim, series, _ = _weak_run()
    f = np.array([r.energy_f for r in series])
    if not np.all(np.diff(f) < 0):
        k = int(np.argmax(np.diff(f) >= 0))
        return False, f"energy not strictly decreasing at sample {k}"
    suff = criteria.sufficient_boundary_conditions(cfg.params, cfg.bc)
    j1, j2 = sim.ref_j
    best_delta, kappa = criteria.scan_delta(cfg.params, cfg.bc, j1, j2)
    t0 = evolve.entry_time(series, cfg.bc, best_delta)
    rate, certified = evolve.decay_fit(series, kappa, t0)
    ok = suff.ok and certified
    return ok, (f"sufficient-conditions ok = {suff.ok}; entry t0 = {t0}; "
                f"kappa = {kappa:.4g}, fitted rate {rate:.4g}, "
                f"certified = {certified}")


def criterion_8():
    """Randomized suites for the two functional inequalities."""
    params = PhysParams(d1=1.0, d2=1.0, eps=0.5, nu=1.0, coupling=1.0)
    bc = StripBC(alpha1=1.1, alpha2=0.9, beta1=0.8, beta2=1.2,
                 voltage=0.3, length=1.0)
    rng = np.random.default_rng(31)
    margin = np.inf
    for _ in range(100):
        shape = (16, 16)
        f1, f2, g1, g2 = np.exp(rng.uniform(np.log(0.3), np.log(3.0),
                                            size=(4,) + shape))
        lhs, rhs, holds = evolve.entropy_inequality_check(
            f1, f2, g1, g2, params, bc)
        if not holds:
            return False, f"entropy inequality violated: lhs {lhs:.3e} > rhs {rhs:.3e}"
        margin = min(margin, rhs - lhs)
        for f, g in ((f1, g1), (f2, g2)):
            l2, ent, ok = evolve.interpolation_check(f, g, bc.length)
            if not ok:
                return False, f"interpolation inequality violated: {l2:.3e} > {ent:.3e}"
    return True, f"0 violations in 100 pairs; smallest entropy-inequality gap {margin:.3e}"


def _circle_curve(m=256):
    th = 2 * np.pi * np.arange(m) / m
    rows = np.column_stack([th, np.cos(th), np.sin(th),
                            1.0 + np.cos(th), np.ones(m), np.sin(th)])
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in rows)


def criterion_9():
    """Flow-indicator quadrature accuracy and the per-component identity."""
    res = flowcheck.flow_indicator(flowcheck.loads_curve(_circle_curve()))
    err = abs(res.i1 - np.pi)
    if err > 1e-6:
        return False, f"circle integral error {err:.3e} (> 1e-6)"

    # additional curves: nonuniform ellipse and a two-component annulus
    rng = np.random.default_rng(5)
    th = np.sort(rng.uniform(0, 2 * np.pi, 200))
    ell = np.column_stack([th, 2 * np.cos(th), np.sin(th),
                           np.cos(3 * th), 0.2 * np.sin(th), np.sin(2 * th)])
    t = 2 * np.pi * np.arange(64) / 64
    outer = np.column_stack([t, 3 * np.cos(t), 3 * np.sin(t),
                             np.sin(t), np.cos(t), np.cos(2 * t)])
    texts = [
        _circle_curve(),
        "\n".join(" ".join(repr(float(v)) for v in r) for r in ell),
        _circle_curve(128) + "\n\n" + "\n".join(
            " ".join(repr(float(v)) for v in r) for r in outer),
    ]
    worst = 0.0
    for text in texts:
        r = flowcheck.flow_indicator(flowcheck.loads_curve(text))
        for a, b in r.per_component:
            worst = max(worst, abs(a + b))
    ok = worst <= 1e-8
    return ok, (f"circle i1 error {err:.3e} (<= 1e-6); "
                f"worst per-component |i1+i2| = {worst:.3e} (<= 1e-8)")


def _mms_sources(params):
    """Closed-form source terms for a manufactured steady state on the unit
    strip: phi_m = b S T, c2_m = 2 + a S C, c1_m = c2_m + r S T with
    S = sin(pi x), C = cos(2 pi y), T = sin(2 pi y), r = 5 pi^2 eps b."""
    a, b = 0.3, 0.1
    r = 5 * np.pi**2 * params.eps * b
    pi = np.pi

    def fields(x, y):
        s, cx = np.sin(pi * x), np.cos(pi * x)
        c2y, s2y = np.cos(2 * pi * y), np.sin(2 * pi * y)
        return s, cx, c2y, s2y

    def c1_m(x, y):
        s, _, c2y, s2y = fields(x, y)
        return 2 + a * s * c2y + r * s * s2y

    def c2_m(x, y):
        s, _, c2y, _ = fields(x, y)
        return 2 + a * s * c2y

    def src_c(x, y, t, which):
        s, cx, c2y, s2y = fields(x, y)
        lap_c2 = -5 * pi**2 * a * s * c2y
        grad_c2_dot_gphi = (a * b * pi**2 * cx**2 * c2y * s2y
                            - 4 * pi**2 * a * b * s**2 * s2y * c2y)
        lap_phi = -5 * pi**2 * b * s * s2y
        if which == 2:
            conv = grad_c2_dot_gphi + c2_m(x, y) * lap_phi
            return -params.d2 * (lap_c2 - conv)
        lap_c1 = lap_c2 - 5 * pi**2 * r * s * s2y
        conv = (grad_c2_dot_gphi
                + r * b * pi**2 * (cx**2 * s2y**2 + 4 * s**2 * c2y**2)
                + c1_m(x, y) * lap_phi)
        return -params.d1 * (lap_c1 + conv)

    def fx(x, y, t):
        s, cx, _, s2y = fields(x, y)
        return params.coupling * r * b * pi * s * cx * s2y**2

    def fy(x, y, t):
        s, _, c2y, s2y = fields(x, y)
        return 2 * pi * params.coupling * r * b * s**2 * s2y * c2y

    sources = evolve.Sources(c1=lambda x, y, t: src_c(x, y, t, 1),
                             c2=lambda x, y, t: src_c(x, y, t, 2),
                             fx=fx, fy=fy)
    return sources, c1_m, c2_m


def _mms_evolve_error(nx):
    params = PhysParams(d1=0.7, d2=1.3, eps=0.2, nu=1.0, coupling=1.0)
    bc = StripBC(alpha1=2.0, alpha2=2.0, beta1=2.0, beta2=2.0,
                 voltage=0.0, length=1.0)
    sources, c1_m, c2_m = _mms_sources(params)
    dt = 2e-3 * (16.0 / nx) ** 2
    t_end = 0.04
    cfg = evolve.EvolveConfig(params=params, bc=bc, nx=nx, ny=nx, dt=dt,
                              t_end=t_end, output_every=10**9,
                              initial="constant", sources=sources)
    sim = evolve.StripSimulator(cfg)
    x = sim.ops.xc[:, None]
    y = sim.ops.yc[None, :]
    from .core import StripState2D
    c1, c2 = c1_m(x, y), c2_m(x, y)
    state = StripState2D(length=1.0, c1=c1, c2=c2,
                         phi=sim.poisson(c1 - c2),
                         ux=np.zeros((nx + 1, nx)), uy=np.zeros((nx, nx)),
                         pressure=np.zeros((nx, nx)), time=0.0)
    for _ in range(int(round(t_end / dt))):
        state = sim.step(state)
    return max(np.max(np.abs(state.c1 - c1)), np.max(np.abs(state.c2 - c2)))


def criterion_10():
    """Manufactured-solution convergence orders (steady and time-dependent)."""
    # steady: self-convergence toward a fine-grid reference at shared nodes
    params = PhysParams(d1=1.0, d2=1.0, eps=0.3, nu=1.0, coupling=1.0)
    bc = StripBC(alpha1=1.2, alpha2=0.8, beta1=0.7, beta2=1.4,
                 voltage=1.0, length=1.0)
    nf = 4097
    fine = steady1d.solve_steady_1d(params, bc, Grid1D.uniform(nf, 1.0))
    errs = []
    for n in (65, 129, 257):
        s = steady1d.solve_steady_1d(params, bc, Grid1D.uniform(n, 1.0))
        stride = (nf - 1) // (n - 1)
        errs.append(max(np.max(np.abs(s.c1 - fine.c1[::stride])),
                        np.max(np.abs(s.c2 - fine.c2[::stride])),
                        np.max(np.abs(s.phi - fine.phi[::stride]))))
    steady_order = float(np.log(errs[0] / errs[2]) / np.log(4.0))

    # evolve, spatial: dt scaled with h^2 so the spatial error dominates
    e_sp = [_mms_evolve_error(nx) for nx in (16, 32, 64)]
    space_order = float(np.log(e_sp[0] / e_sp[2]) / np.log(4.0))

    # evolve, temporal: self-convergence on a fixed coarse grid
    def _final(dt):
        cfg = evolve.EvolveConfig(params=_WEAK_PARAMS, bc=_WEAK_BC, nx=16,
                                  ny=16, dt=dt, t_end=0.2, output_every=10**9,
                                  initial="linear-ramp")
        _, final = evolve.run(cfg)
        return final
    s1, s2, s3 = (_final(dt) for dt in (0.02, 0.01, 0.005))
    e1 = max(np.max(np.abs(s1.c1 - s2.c1)), np.max(np.abs(s1.c2 - s2.c2)))
    e2 = max(np.max(np.abs(s2.c1 - s3.c1)), np.max(np.abs(s2.c2 - s3.c2)))
    time_order = float(np.log2(e1 / e2))

    ok = steady_order >= 1.9 and space_order >= 1.9 and time_order >= 0.9
    return ok, (f"steady order {steady_order:.3f} (>= 1.9), evolve spatial "
                f"order {space_order:.3f} (>= 1.9), temporal order "
                f"{time_order:.3f} (>= 0.9)")


def criterion_11():
    """Determinism: seeded CLI runs emit byte-identical CSV."""
    config_text = (
        "[bc]\nalpha1 = 1.0\nalpha2 = 1.1\nbeta1 = 1.15\nbeta2 = 1.05\n"
        "voltage = 0.1\nlength = 1.0\n\n"
        "[evolve]\nnx = 16\nny = 8\ndt = 0.01\nt_end = 0.1\noutput_every = 2\n"
        "initial = random-bounded\nseed = 5\n")
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        cfgpath = Path(tmp) / "run.ini"
        cfgpath.write_text(config_text)
        for sub in ("a", "b"):
            outdir = Path(tmp) / sub
            code = cli.main(["evolve", "--config", str(cfgpath),
                             "--out", str(outdir)])
            if code != 0:
                return False, f"CLI run exited with {code}"
            outputs.append((outdir / "diagnostics.csv").read_bytes())
    ok = outputs[0] == outputs[1]
    return ok, (f"two seeded runs produced {'identical' if ok else 'DIFFERENT'}"
                f" diagnostics.csv ({len(outputs[0])} bytes)")


CRITERIA = (
    ("steady solver vs monolithic oracle", criterion_1),
    ("a-priori bounds on steady solves", criterion_2),
    ("pointwise current constancy order", criterion_3),
    ("equilibrium currents and potentials", criterion_4),
    ("criterion algebra and decay-rate identity", criterion_5),
    ("maximum-principle monitors and band entry", criterion_6),
    ("free-energy decay certification", criterion_7),
    ("functional inequality suites", criterion_8),
    ("flow-indicator quadrature", criterion_9),
    ("manufactured-solution convergence", criterion_10),
    ("seeded CLI determinism", criterion_11),
)


def run_all(verbose: bool = False):
    """Evaluate all criteria in order, yielding (number, name, passed, detail)."""
    for k, (name, fn) in enumerate(CRITERIA, start=1):
        try:
            passed, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        yield k, name, passed, detail
