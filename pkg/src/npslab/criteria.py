"""Explicit stability constants, the weak-current criterion, and exponential
decay rates for the coupled electrodiffusion-flow system on a strip.

Everything here is closed-form arithmetic in the physical constants, the
boundary data, and the two steady currents (j1, j2): no fields and no solves.
Notation:

  g_lo, g_hi    extremes of the four boundary concentrations,
  D             the smaller diffusivity,
  G_i           weak-current constants; the criterion is
                max_i |j_i| * L * G_i < 1/sqrt(2),
  kappa(delta)  free-energy decay rate once concentrations live in the band
                [g_lo - delta, g_hi + delta].

kappa_i(0) > 0 is algebraically equivalent to the criterion for species i
(thanks to M_i(0) * 2 g_hi L^2 / (D g_lo) = 2 L^2 G_i^2), so the two views in
the report always agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PhysParams, StripBC

#: Stability threshold for the dimensionless current |j_i| * L * G_i.
THRESHOLD = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class StabilityReport:
    """Full stability assessment for one pair of steady currents."""

    g1: float
    g2: float
    lhs1: float              # |j1| * L * G1
    lhs2: float              # |j2| * L * G2
    weak_current_ok: bool
    m1_delta: float
    m2_delta: float
    kappa1_delta: float
    kappa2_delta: float
    kappa_delta: float       # min(kappa1, kappa2, nu / (2 L^2))
    delta_used: float
    suff_log_ok: bool
    suff_exp_ok: bool


@dataclass(frozen=True)
class SufficientConditions:
    """Boundary-data-only sufficient conditions for the weak-current criterion.

    Either form passing guarantees the criterion for the actual currents of
    any steady solve with this boundary data, without performing the solve.
    """

    log_lhs1: float
    log_lhs2: float
    log_ok: bool
    exp_lhs1: float
    exp_lhs2: float
    exp_ok: bool
    ok: bool


def criterion_constants(params: PhysParams, bc: StripBC) -> tuple[float, float]:
    """The weak-current constants (G1, G2)."""
    glo, ghi = bc.gamma_lo, bc.gamma_hi
    d = params.d_min
    common = params.coupling * bc.length**2 * ghi**2 / (params.nu * glo**3)
    g1 = np.sqrt((params.d1 * ghi**2 / (2.0 * glo**4) + common) / d)
    g2 = np.sqrt((params.d2 * ghi**2 / (2.0 * glo**4) + common) / d)
    return float(g1), float(g2)


def band_constants(params: PhysParams, bc: StripBC, delta: float) -> tuple[float, float]:
    """(M1, M2) controlling how strongly the currents erode the decay rate
    inside the widened concentration band."""
    glo, ghi = bc.gamma_lo, bc.gamma_hi
    if not 0.0 <= delta < glo:
        raise ValueError("delta must satisfy 0 <= delta < min boundary concentration")
    glo_d, ghi_d = glo - delta, ghi + delta
    L2 = bc.length**2
    m = []
    for di in (params.d1, params.d2):
        m.append(di * ghi_d / (2.0 * glo_d * glo**2)
                 + params.coupling * L2 * ghi_d / (params.nu * glo**2))
    return m[0], m[1]


def decay_rate(params: PhysParams, bc: StripBC, j1: float, j2: float,
               delta: float) -> tuple[float, float, float]:
    """(kappa1, kappa2, kappa) at the given band width ``delta``.

    kappa may be <= 0 when the currents are too strong for the requested band;
    delta >= min boundary concentration raises ValueError.
    """
    glo, ghi = bc.gamma_lo, bc.gamma_hi
    m1, m2 = band_constants(params, bc, delta)
    L2 = bc.length**2
    base = params.d_min * (glo - delta) / (2.0 * (ghi + delta) * L2)
    k1 = base - m1 * j1 * j1
    k2 = base - m2 * j2 * j2
    return k1, k2, min(k1, k2, params.nu / (2.0 * L2))


def scan_delta(params: PhysParams, bc: StripBC, j1: float, j2: float,
               fractions=None) -> tuple[float, float]:
    """Evaluate kappa over delta = f * g_lo for f in ``fractions`` (default
    0, 0.05, ..., 0.5) and return (best_delta, best_kappa).

    The rate is monotone decreasing in delta for nonzero currents, so this is
    a report of the rate/band trade-off; the maximizer is delta = 0.
    """
    if fractions is None:
        fractions = np.linspace(0.0, 0.5, 11)
    best = (0.0, -np.inf)
    for f in fractions:
        d = float(f) * bc.gamma_lo
        k = decay_rate(params, bc, j1, j2, d)[2]
        if k > best[1]:
            best = (d, k)
    return best


def weak_current_check(
    params: PhysParams,
    bc: StripBC,
    j1: float,
    j2: float,
    delta: float = 0.0,
) -> StabilityReport:
    """Evaluate the criterion and all decay constants at band width ``delta``."""
    g1, g2 = criterion_constants(params, bc)
    lhs1 = abs(j1) * bc.length * g1
    lhs2 = abs(j2) * bc.length * g2
    m1, m2 = band_constants(params, bc, delta)
    k1, k2, k = decay_rate(params, bc, j1, j2, delta)
    suff = sufficient_boundary_conditions(params, bc)
    return StabilityReport(
        g1=g1, g2=g2, lhs1=lhs1, lhs2=lhs2,
        weak_current_ok=max(lhs1, lhs2) < THRESHOLD,
        m1_delta=m1, m2_delta=m2,
        kappa1_delta=k1, kappa2_delta=k2, kappa_delta=k,
        delta_used=delta,
        suff_log_ok=suff.log_ok, suff_exp_ok=suff.exp_ok,
    )


def sufficient_boundary_conditions(params: PhysParams, bc: StripBC) -> SufficientConditions:
    """Check the two boundary-data-only sufficient-condition families.

    The logarithmic form bounds |j_i| through the jump of the chemical
    potential across the channel; the exponential form through the jump of the
    gauge variable, weighted with the a-priori potential barriers.
    """
    g1, g2 = criterion_constants(params, bc)
    ghi = bc.gamma_hi
    V = bc.voltage

    # |mu_i(L) - mu_i(0)| with Phi(0) = -V, Phi(L) = 0; both vanish exactly for
    # Boltzmann-matched boundary data (beta1 = alpha1 e^{-V}, beta2 = alpha2 e^{V}).
    log_lhs1 = abs(np.log(bc.alpha1 / bc.beta1) - V) * ghi * g1
    log_lhs2 = abs(np.log(bc.alpha2 / bc.beta2) + V) * ghi * g2
    log_ok = max(log_lhs1, log_lhs2) < THRESHOLD

    from .steady1d import theoretical_bounds

    # The gauge-variable jumps across the channel: |j_1| <= jump * e^{v} / L
    # since int e^{phi} >= L e^{-v}, and likewise for species 2 with e^{VV}.
    _, _, (phi_lo, phi_hi), _ = theoretical_bounds(bc)
    exp_lhs1 = abs(bc.alpha1 * np.exp(-V) - bc.beta1) * np.exp(-phi_lo) * g1
    exp_lhs2 = abs(bc.alpha2 * np.exp(V) - bc.beta2) * np.exp(phi_hi) * g2
    exp_ok = max(exp_lhs1, exp_lhs2) < THRESHOLD

    return SufficientConditions(
        log_lhs1=float(log_lhs1), log_lhs2=float(log_lhs2), log_ok=log_ok,
        exp_lhs1=float(exp_lhs1), exp_lhs2=float(exp_lhs2), exp_ok=exp_ok,
        ok=log_ok or exp_ok,
    )
