import numpy as np
import pytest
from hypothesis import given, strategies as st

from npslab.core import (
    Grid1D,
    PhysParams,
    StripBC,
    ValidationError,
    cumulative_integral,
    entropy_density,
    gradient_1d,
    integrate,
    relative_entropy,
)


def test_uniform_grid_nodes():
    g = Grid1D.uniform(5, 2.0)
    assert np.allclose(g.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert g.n == 5 and g.length == 2.0


def test_graded_grid_endpoints_and_monotone():
    g = Grid1D.graded(41, 3.0, strength=2.5)
    assert g.nodes[0] == 0.0 and abs(g.nodes[-1] - 3.0) < 1e-14
    assert np.all(np.diff(g.nodes) > 0)


def test_grid_requires_three_nodes():
    with pytest.raises(ValidationError):
        Grid1D.uniform(2, 1.0)


def test_gradient_exact_on_quadratic_nonuniform():
    # The three-point stencil reproduces derivatives of quadratics exactly,
    # including on graded grids and at the one-sided endpoints.
    g = Grid1D.graded(33, 1.0, strength=3.0)
    x = g.nodes
    f = 2.0 * x**2 - 3.0 * x + 1.0
    assert np.max(np.abs(gradient_1d(f, g) - (4.0 * x - 3.0))) < 1e-12


def test_integrate_linear_exact():
    g = Grid1D.graded(17, 2.0, strength=1.5)
    f = 3.0 * g.nodes + 1.0
    assert abs(integrate(f, g) - (3.0 * 2.0 + 2.0)) < 1e-13
    cum = cumulative_integral(f, g)
    assert cum[0] == 0.0
    assert abs(cum[-1] - integrate(f, g)) < 1e-14


def test_entropy_density_properties():
    s = np.array([0.5, 1.0, 2.0])
    direct = s * np.log(s) - s + 1.0
    assert np.max(np.abs(entropy_density(s) - direct)) < 1e-14
    assert entropy_density(np.array([1.0]))[0] == 0.0


def test_entropy_density_series_continuous_near_one():
    # The series branch takes over for |s - 1| < 1e-4; both branches must agree.
    s = 1.0 + np.array([-2e-4, -5e-5, 5e-5, 2e-4])
    direct = s * np.log(s) - s + 1.0
    # agreement limited by rounding in the direct formula itself
    assert np.max(np.abs(entropy_density(s) - direct)) < 1e-15


@given(st.floats(min_value=0.01, max_value=100.0))
def test_entropy_density_nonnegative(s):
    assert entropy_density(np.array([s]))[0] >= 0.0


def test_relative_entropy_zero_iff_equal():
    g = Grid1D.uniform(33, 1.0)
    f = 1.0 + 0.5 * np.sin(2 * np.pi * g.nodes)
    assert relative_entropy(f, f, g) == 0.0
    assert relative_entropy(f + 0.1, f, g) > 0.0


@pytest.mark.parametrize("field", ["d1", "d2", "eps", "nu"])
def test_phys_params_positivity(field):
    kwargs = dict(d1=1.0, d2=1.0, eps=1.0, nu=1.0, coupling=1.0)
    kwargs[field] = -1.0
    with pytest.raises(ValidationError):
        PhysParams(**kwargs)


def test_phys_params_d_min():
    p = PhysParams(d1=0.4, d2=1.7, eps=1.0, nu=1.0, coupling=1.0)
    assert p.d_min == 0.4


def test_strip_bc_validation_and_hull():
    with pytest.raises(ValidationError):
        StripBC(0.0, 1.0, 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        StripBC(1.0, 1.0, 1.0, 1.0, 0.0, -1.0)
    bc = StripBC(1.0, 1.1, 1.15, 1.05, 0.1, 1.0)
    assert bc.gamma_lo == 1.0 and bc.gamma_hi == 1.15
