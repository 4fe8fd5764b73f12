import numpy as np
import pytest

from npslab.core import PhysParams, StripBC, ValidationError
from npslab.evolve import (
    CFLError,
    EvolveConfig,
    StripSimulator,
    bernoulli,
    decay_fit,
    entropy_inequality_check,
    interpolation_check,
    run,
    step,
)

PARAMS = PhysParams(d1=1.0, d2=1.0, eps=1.0, nu=1.0, coupling=1.0)
BC = StripBC(alpha1=1.0, alpha2=1.1, beta1=1.15, beta2=1.05, voltage=0.1, length=1.0)


def _config(**kw):
    base = dict(params=PARAMS, bc=BC, nx=16, ny=8, dt=0.005, t_end=0.05)
    base.update(kw)
    return EvolveConfig(**base)


def test_bernoulli_smooth_through_zero():
    x = np.array([-1e-3, -1e-7, 0.0, 1e-7, 1e-3, 5.0])
    vals = bernoulli(x)
    with np.errstate(invalid="ignore"):
        expected = np.where(x == 0.0, 1.0, x / np.expm1(x))
    assert np.max(np.abs(vals - expected)) < 1e-12


def test_config_validation():
    with pytest.raises(ValidationError):
        _config(nx=4)
    with pytest.raises(ValidationError):
        _config(dt=-0.1)
    with pytest.raises(ValidationError):
        _config(t_end=0.001)  # shorter than one step
    with pytest.raises(ValidationError):
        _config(initial="nonsense")


def test_reference_state_is_stationary():
    cfg = _config()
    sim = StripSimulator(cfg)
    ref = sim.reference_state()
    after = sim.step(ref)
    assert np.max(np.abs(after.c1 - ref.c1)) < 1e-12
    assert np.max(np.abs(after.c2 - ref.c2)) < 1e-12
    assert np.max(np.abs(after.ux)) < 1e-14
    assert np.max(np.abs(after.uy)) < 1e-14


def test_velocity_stays_divergence_free():
    cfg = _config(initial="random-bounded", seed=3)
    sim = StripSimulator(cfg)
    state = sim.initial_state()
    for _ in range(3):
        state = sim.step(state)
    assert np.max(np.abs(sim.divergence(state))) < 1e-12


def test_free_energy_decreases():
    cfg = _config(initial="random-bounded", seed=5, t_end=0.1)
    series, final = run(cfg)
    energies = [row.energy_f for row in series]
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert final.time == pytest.approx(0.1)


def test_monitors_respect_boundary_hull():
    cfg = _config(initial="random-bounded", seed=5, t_end=0.1)
    series, _ = run(cfg)
    for row in series:
        assert row.m_hi >= BC.gamma_hi - 1e-14
        assert row.m_lo <= BC.gamma_lo + 1e-14
    # the monitors never move outward in time
    his = [row.m_hi for row in series]
    los = [row.m_lo for row in series]
    assert all(b <= a + 1e-12 for a, b in zip(his, his[1:]))
    assert all(b >= a - 1e-12 for a, b in zip(los, los[1:]))


def test_cfl_error_reports_admissible_dt():
    cfg = _config(dt=10.0, t_end=10.0, initial="random-bounded", seed=1)
    sim = StripSimulator(cfg)
    state = sim.initial_state()
    with pytest.raises(CFLError) as exc:
        sim.step(state)
    assert 0.0 < exc.value.admissible_dt < 10.0


def test_module_level_step_matches_simulator():
    cfg = _config(initial="random-bounded", seed=9)
    sim = StripSimulator(cfg)
    state = sim.initial_state()
    a = sim.step(state)
    b = step(state, cfg)
    assert np.max(np.abs(a.c1 - b.c1)) == 0.0
    assert np.max(np.abs(a.uy - b.uy)) == 0.0


def test_decay_fit_certifies_exponential_series():
    class Row:
        def __init__(self, t, f):
            self.time = t
            self.energy_f = f

    ts = np.linspace(0.0, 2.0, 41)
    series = [Row(t, 3.0 * np.exp(-2.0 * t)) for t in ts]
    rate, certified = decay_fit(series, kappa_delta=1.5, t_start=0.0)
    assert certified
    rate, certified = decay_fit(series, kappa_delta=2.5, t_start=0.0)
    assert not certified
    with pytest.raises(ValueError):
        decay_fit(series[:5], kappa_delta=1.0, t_start=0.0)


def test_entropy_and_interpolation_inequalities():
    rng = np.random.default_rng(0)
    shape = (16, 16)
    f1, f2, g1, g2 = (rng.uniform(0.4, 2.5, shape) for _ in range(4))
    lhs, rhs, holds = entropy_inequality_check(f1, f2, g1, g2, PARAMS, BC)
    assert holds and lhs <= rhs
    l2, ent, ok = interpolation_check(f1, g1, BC.length)
    assert ok and l2 <= ent
