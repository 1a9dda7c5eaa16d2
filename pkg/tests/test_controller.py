import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from feathersim.controller import (
    ControllerError,
    LogRatioParams,
    StrokeController,
    angle_at,
    baseline_controller,
    to_controller,
    to_ratios,
)

A = math.radians(60)


def segments(c):
    return (c.t_up_s, c.t_down_s, c.t_hold_up_s, c.t_hold_down_s)


@pytest.mark.parametrize("params, expected", [
    ((0.0, 0.0, math.log(2), 1.5), (0.25, 0.25, 0.5, 0.5)),
    ((0.0, 0.0, 0.0, 2.0), (0.5, 0.5, 0.5, 0.5)),
    ((math.log(2), math.log(3), 0.0, 2.0), (2 / 3, 1 / 3, 0.75, 0.25)),
])
def test_to_controller_examples(params, expected):
    c = to_controller(LogRatioParams(*params))
    assert segments(c) == pytest.approx(expected, abs=1e-12)


def test_to_ratios_examples():
    p = to_ratios(baseline_controller())
    assert (p.log_up_down, p.log_holds, p.log_hold_move, p.period_s) == pytest.approx(
        (0.0, 0.0, math.log(2), 1.5), abs=1e-12)
    p = to_ratios(StrokeController(0.5, 0.5, 0.5, 0.5))
    assert (p.log_up_down, p.log_holds, p.log_hold_move, p.period_s) == pytest.approx(
        (0, 0, 0, 2.0), abs=1e-12)


def test_zero_segment_has_no_log_ratio():
    with pytest.raises(ControllerError, match="log undefined for zero segment"):
        to_ratios(StrokeController(0.25, 0.25, 0.5, 0.0))


def test_invalid_params():
    with pytest.raises(ControllerError):
        LogRatioParams(math.inf, 0, 0, 1.5)
    with pytest.raises(ControllerError):
        LogRatioParams(0, 0, 0, 0.0)
    with pytest.raises(ControllerError):
        StrokeController(0.0, 0.0, 1.0, 1.0)
    with pytest.raises(ControllerError):
        StrokeController(-0.1, 0.3, 1.0, 1.0)


def test_waveform_examples():
    c = baseline_controller(A)
    assert angle_at(c, 0.0) == pytest.approx(-A / 2)
    assert angle_at(c, 0.25) == pytest.approx(A / 2)
    assert angle_at(c, 0.125) == pytest.approx(0.0, abs=1e-15)
    for k in range(1, 6):
        assert angle_at(c, 1.5 * k) == pytest.approx(-A / 2, abs=1e-12)
    # downstroke midpoint
    assert angle_at(c, 0.875) == pytest.approx(0.0, abs=1e-12)


def test_waveform_periodic_and_bounded():
    c = StrokeController(0.13, 0.41, 0.07, 0.29, A)
    t = np.linspace(0, 5, 20001)
    a = angle_at(c, t)
    b = angle_at(c, t + c.period_s)
    assert np.max(np.abs(a - b)) < 1e-12
    assert a.min() >= -A / 2 - 1e-15 and a.max() <= A / 2 + 1e-15


def test_waveform_lipschitz():
    c = StrokeController(0.13, 0.41, 0.07, 0.29, A)
    t = np.linspace(0, 3 * c.period_s, 60001)
    a = angle_at(c, t)
    slope = np.abs(np.diff(a)) / np.diff(t)
    assert slope.max() <= max(A / c.t_up_s, A / c.t_down_s) * (1 + 1e-9)


log_ratio = st.floats(min_value=-4.0, max_value=4.0, allow_nan=False)


@given(log_ratio, log_ratio, log_ratio, st.floats(min_value=0.2, max_value=6.0))
@settings(max_examples=200, deadline=None)
def test_ratio_round_trip(a, b, c, period):
    p = LogRatioParams(a, b, c, period)
    ctrl = to_controller(p)
    assert all(s >= 0 for s in segments(ctrl))
    assert sum(segments(ctrl)) == pytest.approx(period, abs=1e-12)
    back = to_ratios(ctrl)
    assert back.as_array() == pytest.approx(p.as_array(), abs=1e-9)
    assert back.period_s == pytest.approx(period, abs=1e-12)


def test_dict_round_trip():
    c = StrokeController(0.1, 0.2, 0.3, 0.4, 0.5)
    assert StrokeController.from_dict(c.to_dict()) == c
    with pytest.raises(ControllerError):
        StrokeController.from_dict({**c.to_dict(), "phase": 1.0})
