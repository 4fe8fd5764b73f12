import math

import numpy as np
import pytest

from npslab.core import Grid1D, PhysParams, StripBC
from npslab.criteria import (
    THRESHOLD,
    band_constants,
    criterion_constants,
    decay_rate,
    scan_delta,
    sufficient_boundary_conditions,
    weak_current_check,
)
from npslab.steady1d import solve_steady_1d

UNIT = PhysParams(d1=1.0, d2=1.0, eps=1.0, nu=1.0, coupling=1.0)
# Boundary data with concentration hull [1, 2].
HULL_BC = StripBC(alpha1=1.0, alpha2=1.0, beta1=2.0, beta2=2.0, voltage=0.0, length=1.0)


def test_threshold_value():
    assert abs(THRESHOLD - 1.0 / math.sqrt(2.0)) < 1e-16


def test_criterion_constants_hand_value():
    # Unit parameters with hull [1, 2]: G_i = sqrt(4/2 + 4/1) = sqrt(6).
    g1, g2 = criterion_constants(UNIT, HULL_BC)
    assert abs(g1 - math.sqrt(6.0)) < 1e-14
    assert abs(g2 - math.sqrt(6.0)) < 1e-14


def test_decay_rate_hand_value():
    # kappa_i at delta=0: 1/(2*2) - M_i * j^2 with M_i = G_i^2 * gamma_lo/gamma_hi = 3,
    # so j = 0.1 gives 0.25 - 0.03 = 0.22.
    k1, k2, k = decay_rate(UNIT, HULL_BC, 0.1, 0.1, 0.0)
    assert abs(k1 - 0.22) < 1e-14
    assert abs(k2 - 0.22) < 1e-14
    assert abs(k - 0.22) < 1e-14  # nu/(2 L^2) = 0.5 does not bind


def test_viscous_floor_binds_for_small_nu():
    params = PhysParams(d1=1.0, d2=1.0, eps=1.0, nu=0.1, coupling=1.0)
    _, _, k = decay_rate(params, HULL_BC, 0.0, 0.0, 0.0)
    assert abs(k - 0.05) < 1e-14


def test_band_identity_links_criterion_and_rate():
    # M_i at delta=0 equals G_i^2 * D * gamma_lo / gamma_hi, which makes
    # kappa_i > 0 equivalent to |j_i| L G_i < 1/sqrt(2).
    rng = np.random.default_rng(7)
    for _ in range(25):
        params = PhysParams(*(float(v) for v in rng.uniform(0.2, 3.0, 5)))
        a1, a2, b1, b2 = (float(v) for v in rng.uniform(0.5, 2.5, 4))
        bc = StripBC(a1, a2, b1, b2, float(rng.uniform(0, 2)), float(rng.uniform(0.5, 2)))
        g1, g2 = criterion_constants(params, bc)
        m1, m2 = band_constants(params, bc, 0.0)
        scale = params.d_min * bc.gamma_lo / bc.gamma_hi
        assert abs(m1 - g1**2 * scale) <= 1e-12 * m1
        assert abs(m2 - g2**2 * scale) <= 1e-12 * m2
        j1, j2 = (float(v) for v in rng.uniform(-0.5, 0.5, 2))
        k1, k2, _ = decay_rate(params, bc, j1, j2, 0.0)
        assert (k1 > 0) == (abs(j1) * bc.length * g1 < THRESHOLD)
        assert (k2 > 0) == (abs(j2) * bc.length * g2 < THRESHOLD)


def test_band_constants_reject_bad_delta():
    with pytest.raises(ValueError):
        band_constants(UNIT, HULL_BC, HULL_BC.gamma_lo)
    with pytest.raises(ValueError):
        band_constants(UNIT, HULL_BC, -0.1)


def test_scan_delta_no_worse_than_delta_zero():
    _, _, k0 = decay_rate(UNIT, HULL_BC, 0.1, 0.1, 0.0)
    delta, best = scan_delta(UNIT, HULL_BC, 0.1, 0.1)
    assert best >= k0 - 1e-15
    assert 0.0 <= delta < HULL_BC.gamma_lo


def test_weak_current_report_is_consistent():
    rep = weak_current_check(UNIT, HULL_BC, 0.1, 0.1)
    assert rep.weak_current_ok == (max(rep.lhs1, rep.lhs2) < THRESHOLD)
    assert abs(rep.lhs1 - 0.1 * HULL_BC.length * rep.g1) < 1e-15
    assert rep.kappa_delta == min(rep.kappa1_delta, rep.kappa2_delta, 0.5)


def test_sufficient_conditions_vanish_at_equilibrium():
    # Boltzmann-matched boundary data at voltage V: both forms give zero lhs.
    v = 0.7
    bc = StripBC(
        alpha1=1.0,
        alpha2=1.0,
        beta1=math.exp(-v),
        beta2=math.exp(v),
        voltage=v,
        length=1.0,
    )
    suff = sufficient_boundary_conditions(UNIT, bc)
    assert suff.exp_lhs1 < 1e-14 and suff.exp_lhs2 < 1e-14
    assert abs(suff.log_lhs1) < 1e-12 and abs(suff.log_lhs2) < 1e-12
    assert suff.ok


def test_sufficient_conditions_are_sound():
    # Whenever either sufficient form holds, the a-posteriori weak-current
    # criterion evaluated on the actual solve must hold too.
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(40):
        params = PhysParams(
            d1=float(rng.uniform(0.5, 2)),
            d2=float(rng.uniform(0.5, 2)),
            eps=float(rng.uniform(0.1, 1)),
            nu=1.0,
            coupling=1.0,
        )
        base = float(rng.uniform(0.8, 1.2))
        bc = StripBC(
            alpha1=base,
            alpha2=base * float(rng.uniform(0.95, 1.05)),
            beta1=base * float(rng.uniform(0.95, 1.05)),
            beta2=base * float(rng.uniform(0.95, 1.05)),
            voltage=float(rng.uniform(0, 0.1)),
            length=1.0,
        )
        suff = sufficient_boundary_conditions(params, bc)
        if not suff.ok:
            continue
        st = solve_steady_1d(params, bc, Grid1D.uniform(65, 1.0))
        rep = weak_current_check(params, bc, st.j1, st.j2)
        assert rep.weak_current_ok
        checked += 1
    assert checked >= 10
