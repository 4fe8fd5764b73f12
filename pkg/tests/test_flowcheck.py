import numpy as np
import pytest

from npslab.flowcheck import (
    CurveFormatError,
    flow_indicator,
    load_curve,
    loads_curve,
)


def _rows_to_text(rows):
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in rows)


def _circle_rows(m=256, gamma1=None, gamma2=None, w=None):
    th = 2 * np.pi * np.arange(m) / m
    g1 = 1.0 + np.cos(th) if gamma1 is None else gamma1(th)
    g2 = np.ones(m) if gamma2 is None else gamma2(th)
    wv = np.sin(th) if w is None else w(th)
    return np.column_stack([th, np.cos(th), np.sin(th), g1, g2, wv])


def test_circle_indicator_value():
    # gamma1 - gamma2 = cos(theta), w = sin(theta):
    # i1 = integral cos(theta) * cos(theta) d theta = pi.
    res = flow_indicator(loads_curve(_rows_to_text(_circle_rows())))
    assert abs(res.i1 - np.pi) < 1e-10
    assert res.predicts_flow


def test_component_identity_i1_plus_i2_zero():
    res = flow_indicator(loads_curve(_rows_to_text(_circle_rows())))
    for a, b in res.per_component:
        assert abs(a + b) < 1e-10


def test_orientation_reversal_flips_sign():
    rows = _circle_rows(128)
    fwd = flow_indicator(loads_curve(_rows_to_text(rows)))
    rev = rows[::-1].copy()
    rev[:, 0] = rows[:, 0]  # keep the parameter increasing
    bwd = flow_indicator(loads_curve(_rows_to_text(rev)))
    assert abs(fwd.i1 + bwd.i1) < 1e-10


def test_swapping_species_flips_sign():
    rows = _circle_rows(128)
    swapped = rows.copy()
    swapped[:, [3, 4]] = rows[:, [4, 3]]
    a = flow_indicator(loads_curve(_rows_to_text(rows)))
    b = flow_indicator(loads_curve(_rows_to_text(swapped)))
    assert abs(a.i1 + b.i1) < 1e-10


def test_equal_concentration_traces_predict_no_flow():
    rows = _circle_rows(128, gamma1=lambda t: 1.0 + np.cos(t),
                        gamma2=lambda t: 1.0 + np.cos(t))
    res = flow_indicator(loads_curve(_rows_to_text(rows)))
    assert abs(res.i1) < 1e-12
    assert not res.predicts_flow


def test_multi_component_parsing_and_comments(tmp_path):
    text = (
        "# outer boundary\n"
        + _rows_to_text(_circle_rows(64))
        + "\n\n# inner boundary\n"
        + _rows_to_text(_circle_rows(32))
    )
    path = tmp_path / "curve.txt"
    path.write_text(text)
    curve = load_curve(path)
    assert len(curve.components) == 2
    res = flow_indicator(curve)
    assert len(res.per_component) == 2


def test_too_few_samples_rejected():
    with pytest.raises(CurveFormatError):
        loads_curve(_rows_to_text(_circle_rows(8)))


def test_wrong_column_count_rejected():
    with pytest.raises(CurveFormatError):
        loads_curve("0.0 1.0 0.0 1.0 1.0\n" * 20)


def test_non_numeric_rejected():
    bad = _rows_to_text(_circle_rows(32)).replace("1.0", "one", 1)
    with pytest.raises(CurveFormatError):
        loads_curve(bad)


def test_open_curve_rejected():
    th = np.pi * np.arange(32) / 32  # half circle: endpoints far apart
    rows = np.column_stack([th, np.cos(th), np.sin(th),
                            1.0 + np.cos(th), np.ones(32), np.sin(th)])
    with pytest.raises(CurveFormatError):
        loads_curve(_rows_to_text(rows))
