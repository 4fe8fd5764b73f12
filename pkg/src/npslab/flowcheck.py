"""Boundary-integral indicator for nonzero steady fluid flow.

For a steady state with zero flow, the electric force must be a gradient; on
a 2D domain this fails -- and the steady flow is necessarily nonzero --
whenever either of the boundary integrals

    i1 = sum over components of  oint (gamma1 - gamma2) dW/ds ds
    i2 = sum over components of  oint W d(gamma1 - gamma2)/ds ds

is nonzero, where gamma_i are the boundary concentration traces and W the
boundary potential.  On each closed component i1 = -i2 by integration by
parts, which doubles as a quadrature self-check.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .core import BoundaryCurve2D, CurveComponent, ValidationError


class CurveFormatError(ValueError):
    """Raised for malformed or open curve input."""


@dataclass(frozen=True)
class FlowResult:
    i1: float
    i2: float
    predicts_flow: bool
    tol: float
    per_component: tuple[tuple[float, float], ...]


def _parse_block(lines, index):
    rows = []
    for ln in lines:
        parts = ln.split()
        if len(parts) != 6:
            raise CurveFormatError(
                f"component {index}: expected 6 columns (s x y gamma1 gamma2 w), "
                f"got {len(parts)}: {ln!r}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise CurveFormatError(f"component {index}: {exc}") from None
    data = np.array(rows)
    s, x, y, g1, g2, w = data.T
    pos = np.column_stack([x, y])

    # a repeated closing sample is allowed; drop it
    if data.shape[0] >= 2 and np.allclose(data[0, 1:], data[-1, 1:]) and s[-1] > s[0]:
        s, pos, g1, g2, w = s[:-1], pos[:-1], g1[:-1], g2[:-1], w[:-1]

    if s.size < 16:
        raise CurveFormatError(f"component {index}: need at least 16 samples, got {s.size}")
    if np.any(np.diff(s) <= 0):
        raise CurveFormatError(f"component {index}: parameter column must increase")

    # closedness: the gap back to the first sample should look like one more step
    spacing = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    gap = np.linalg.norm(pos[-1] - pos[0])
    if gap > 3.0 * np.median(spacing):
        raise CurveFormatError(
            f"component {index}: curve is not closed "
            f"(closing gap {gap:.3g} vs median spacing {np.median(spacing):.3g})")
    try:
        return CurveComponent(position=pos, gamma1=g1, gamma2=g2, w=w, s=s)
    except ValidationError as exc:
        raise CurveFormatError(f"component {index}: {exc}") from None


def load_curve(source) -> BoundaryCurve2D:
    """Read a boundary curve from columnar text.

    Six whitespace-separated columns per row: s, x, y, gamma1, gamma2, w.
    Components are separated by blank lines; ``#`` starts a comment.
    ``source`` is a path or a readable file object.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    return loads_curve(text)


def loads_curve(text: str) -> BoundaryCurve2D:
    """Parse curve text; see load_curve."""
    blocks, current = [], []
    for raw in io.StringIO(text):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current:
                blocks.append(current)
                current = []
            continue
        current.append(line)
    if current:
        blocks.append(current)
    if not blocks:
        raise CurveFormatError("no curve data found")
    comps = tuple(_parse_block(b, i) for i, b in enumerate(blocks))
    return BoundaryCurve2D(components=comps)


def _spectral_derivative(values, h):
    """Fourier derivative of periodic samples with uniform spacing h."""
    m = values.size
    k = 2.0j * np.pi * np.fft.rfftfreq(m, d=h)
    return np.fft.irfft(k * np.fft.rfft(values), n=m)


def _component_integrals(comp: CurveComponent):
    """(i1, i2, scale) for one closed component.

    i1 = oint (gamma1-gamma2) dW,  i2 = oint W d(gamma1-gamma2); both computed
    as parameter integrals with weights matching the derivative rule.
    """
    rho = comp.gamma1 - comp.gamma2
    s = comp.s
    ds = np.diff(s)
    if np.allclose(ds, ds[0], rtol=1e-9, atol=0.0):
        # uniform parameter: spectral derivative + rectangle rule, both
        # spectrally accurate on the closed loop
        h = ds[0]
        dw = _spectral_derivative(comp.w, h)
        drho = _spectral_derivative(rho, h)
        i1 = float(np.sum(rho * dw) * h)
        i2 = float(np.sum(comp.w * drho) * h)
        scale = float(np.max(np.abs(rho)) * np.sum(np.abs(dw)) * h
                      + np.max(np.abs(comp.w)) * np.sum(np.abs(drho)) * h)
        return i1, i2, scale

    # nonuniform: chord-length trapezoid around the loop
    seg = np.linalg.norm(np.diff(comp.position, axis=0), axis=1)
    close = np.linalg.norm(comp.position[0] - comp.position[-1])
    if close == 0.0:
        close = float(np.median(seg))
    wgt = np.empty(s.size)
    wgt[1:-1] = 0.5 * (seg[:-1] + seg[1:])
    wgt[0] = 0.5 * (close + seg[0])
    wgt[-1] = 0.5 * (seg[-1] + close)
    t = np.concatenate(([0.0], np.cumsum(seg)))
    tp = np.concatenate(([t[0] - close], t, [t[-1] + close]))

    def ddt(values):
        vp = np.concatenate(([values[-1]], values, [values[0]]))
        return (vp[2:] - vp[:-2]) / (tp[2:] - tp[:-2])

    dw = ddt(comp.w)
    drho = ddt(rho)
    i1 = float(np.sum(rho * dw * wgt))
    i2 = float(np.sum(comp.w * drho * wgt))
    scale = float(np.sum((np.abs(rho * dw) + np.abs(comp.w * drho)) * wgt))
    return i1, i2, scale


def flow_indicator(curve: BoundaryCurve2D, tol: float | None = None) -> FlowResult:
    """Evaluate the two boundary integrals and the flow prediction.

    ``tol`` defaults to 1e-10 times the accumulated integrand magnitude, so a
    zero verdict is relative to the data's own scale.  A nonzero verdict is a
    guarantee of nonzero steady flow; a zero verdict claims nothing.
    """
    per = []
    scale = 0.0
    for comp in curve.components:
        i1c, i2c, sc = _component_integrals(comp)
        per.append((i1c, i2c))
        scale += sc
    i1 = float(sum(p[0] for p in per))
    i2 = float(sum(p[1] for p in per))
    if tol is None:
        tol = 1e-10 * max(scale, 1.0)
    return FlowResult(i1=i1, i2=i2,
                      predicts_flow=bool(abs(i1) > tol or abs(i2) > tol),
                      tol=float(tol), per_component=tuple(per))
