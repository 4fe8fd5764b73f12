import numpy as np
import pytest

from npslab.core import Grid1D, PhysParams, StripBC
from npslab.oracles import solve_steady_monolithic
from npslab.steady1d import (
    check_bounds,
    currents,
    current_deviation,
    eta_boundary_values,
    residual_steady,
    solve_steady_1d,
    theoretical_bounds,
)

PARAMS = PhysParams(d1=0.8, d2=1.3, eps=0.3, nu=1.0, coupling=1.0)
BC = StripBC(alpha1=1.2, alpha2=0.8, beta1=0.7, beta2=1.4, voltage=1.0, length=1.0)


@pytest.fixture(scope="module")
def state():
    return solve_steady_1d(PARAMS, BC, Grid1D.uniform(129, 1.0))


def test_boundary_values_attained(state):
    assert abs(state.c1[0] - BC.alpha1) < 1e-14
    assert abs(state.c1[-1] - BC.beta1) < 1e-14
    assert abs(state.c2[0] - BC.alpha2) < 1e-14
    assert abs(state.c2[-1] - BC.beta2) < 1e-14
    assert abs(state.phi[0] + BC.voltage) < 1e-14
    assert abs(state.phi[-1]) < 1e-14


def test_discrete_residual_small(state):
    r1, r2, rphi = residual_steady(state, PARAMS)
    assert max(r1, r2) < 1e-9
    assert rphi < 1e-7


def test_currents_match_gauge_formula(state):
    # The reported currents are the gauge-transformed boundary-value jumps
    # divided by the weighted length integrals.
    from npslab.core import cumulative_integral

    e10, e1L, e20, e2L = eta_boundary_values(BC)
    w1 = np.exp(state.phi)
    w2 = np.exp(-state.phi)
    j1 = (e1L - e10) / cumulative_integral(w1, state.grid)[-1]
    j2 = (e2L - e20) / cumulative_integral(w2, state.grid)[-1]
    c1, c2 = currents(state)
    assert abs(c1 - j1) < 1e-12 and abs(c2 - j2) < 1e-12
    assert abs(state.j1 - j1) < 1e-12 and abs(state.j2 - j2) < 1e-12


def test_a_priori_bounds_hold(state):
    report = check_bounds(state, BC)
    assert report.satisfied
    assert report.max_violation <= 1e-9


def test_theoretical_bounds_bracket_boundary_data():
    (_, _), (_, _), (phi_lo, phi_hi), (g_lo, g_hi) = theoretical_bounds(BC)
    for val in (BC.alpha1, BC.alpha2, BC.beta1, BC.beta2):
        assert g_lo - 1e-14 <= val <= g_hi + 1e-14
    assert phi_lo <= -BC.voltage + 1e-14
    assert phi_hi >= 0.0 - 1e-14


def test_equilibrium_has_zero_current_and_flat_potentials():
    bc = StripBC(1.0, 1.0, 1.0, 1.0, 0.0, 1.0)
    st = solve_steady_1d(PARAMS, bc, Grid1D.uniform(65, 1.0))
    assert abs(st.j1) < 1e-12 and abs(st.j2) < 1e-12
    mu1, mu2 = st.chemical_potentials()
    assert np.ptp(mu1) < 1e-10 and np.ptp(mu2) < 1e-10


def test_matches_monolithic_oracle():
    grid = Grid1D.uniform(65, 1.0)
    a = solve_steady_1d(PARAMS, BC, grid)
    b = solve_steady_monolithic(PARAMS, BC, grid)
    worst = max(
        np.max(np.abs(a.c1 - b.c1)),
        np.max(np.abs(a.c2 - b.c2)),
        np.max(np.abs(a.phi - b.phi)),
    )
    assert worst < 1e-8


def test_current_deviation_shrinks_under_refinement():
    devs = []
    for n in (33, 65, 129):
        st = solve_steady_1d(PARAMS, BC, Grid1D.uniform(n, 1.0))
        devs.append(max(current_deviation(st)))
    assert devs[1] < devs[0] and devs[2] < devs[1]
    order = np.log2(devs[1] / devs[2])
    assert order > 1.7


def test_grid_length_mismatch_rejected():
    with pytest.raises(ValueError):
        solve_steady_1d(PARAMS, BC, Grid1D.uniform(33, 2.0))


def test_works_on_graded_grid():
    st = solve_steady_1d(PARAMS, BC, Grid1D.graded(97, 1.0, strength=2.0))
    assert check_bounds(st, BC).satisfied
    r1, r2, _ = residual_steady(st, PARAMS)
    assert max(r1, r2) < 1e-9
