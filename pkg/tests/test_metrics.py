import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from feathersim.hydro import ThrustTrace
from feathersim.metrics import (
    MetricsError,
    average_thrust,
    impulses,
    normalized_design_ratio,
    thrust_metrics,
    thrust_ratio,
)


def trace(samples, period_samples=None, transient=0, dt=0.01):
    samples = np.asarray(samples, dtype=float)
    n = period_samples or len(samples)
    return ThrustTrace.from_samples(samples, dt, n * dt, transient_cycles=transient)


def square(hi, lo, n=100, cycles=1):
    half = n // 2
    one = np.r_[np.full(half, hi), np.full(n - half, lo)]
    return trace(np.tile(one, cycles), period_samples=n)


def test_average_examples():
    assert average_thrust(trace(np.full(50, 3.7))) == pytest.approx(3.7)
    t = np.arange(400) * 0.01
    assert abs(average_thrust(trace(np.sin(2 * np.pi * t / 1.0), period_samples=100))) < 1e-10
    assert average_thrust(trace([1, 3, 2, 2])) == pytest.approx(2.0)


def test_ratio_examples():
    assert thrust_ratio(square(1, -1)).value == pytest.approx(1.0)
    assert thrust_ratio(square(2, -1)).value == pytest.approx(2.0)
    r = thrust_ratio(trace(np.full(20, 0.5)))
    assert r.unbounded and math.isinf(r.value)
    assert r.numerator == pytest.approx(0.5 * 20 * 0.01)


def test_unbounded_sorts_above_finite():
    big = thrust_ratio(square(1000, -1))
    inf = thrust_ratio(trace(np.full(20, 0.1)))
    assert inf.sort_key() > big.sort_key()


def test_zero_samples_excluded():
    r = thrust_ratio(trace([0, 0, 2, -1, 0]))
    assert r.numerator == pytest.approx(0.02) and r.denominator == pytest.approx(0.01)


def test_transient_cycles_are_excluded():
    s = np.r_[np.full(10, 100.0), np.full(10, 1.0), np.full(10, 1.0)]
    tr = trace(s, period_samples=10, transient=1)
    assert average_thrust(tr) == pytest.approx(1.0)


def test_partial_trailing_cycle_ignored():
    s = np.r_[np.full(10, 1.0), np.full(3, 50.0)]
    tr = ThrustTrace.from_samples(s, 0.01, 0.1, transient_cycles=0)
    assert average_thrust(tr) == pytest.approx(1.0)


def test_short_trace_rejected():
    with pytest.raises(MetricsError):
        average_thrust(trace(np.ones(10), transient=1))
    with pytest.raises(MetricsError):
        thrust_ratio(trace(np.ones(10), transient=1))


def test_normalized_design_ratio():
    a = square(2, -1, cycles=2)
    assert normalized_design_ratio(a, a) == pytest.approx(1.0)
    assert normalized_design_ratio(a.scaled(2.0), a) == pytest.approx(2.0)
    with pytest.raises(MetricsError):
        normalized_design_ratio(a, square(1, -1))


@pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
def test_ratio_scale_invariance(alpha):
    rng = np.random.default_rng(1)
    t = trace(rng.normal(0.1, 1.0, 500), period_samples=100, transient=1)
    assert thrust_ratio(t.scaled(alpha)).value == pytest.approx(thrust_ratio(t).value, rel=1e-12)


samples = st.lists(st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=8, max_size=8)


@given(samples, samples, st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=100, deadline=None)
def test_average_is_linear(s1, s2, a, b):
    t1, t2 = trace(s1), trace(s2)
    combo = trace(a * np.asarray(s1) + b * np.asarray(s2))
    assert average_thrust(combo) == pytest.approx(
        a * average_thrust(t1) + b * average_thrust(t2), abs=1e-9)


@given(samples)
@settings(max_examples=100, deadline=None)
def test_impulse_balance(s):
    t = trace(s)
    pos, neg = impulses(t)
    duration = len(s) * t.dt_s
    assert pos - neg == pytest.approx(average_thrust(t) * duration, rel=1e-9, abs=1e-12)
    m = thrust_metrics(t)
    if not m.thrust_ratio.unbounded:
        assert m.thrust_ratio.value * neg == pytest.approx(pos, rel=1e-9)


def test_rectangle_rule_first_order():
    # T(t) = sin(2 pi t) + 0.3 over one period; exact ratio from the roots of sin = -0.3
    def ratio(dt):
        n = int(round(1.0 / dt))
        t = (np.arange(n) + 0.5) * dt  # midpoint sampling avoids exact zeros
        return thrust_ratio(ThrustTrace.from_samples(np.sin(2 * np.pi * t) + 0.3, dt, 1.0, 0)).value

    t0 = math.asin(-0.3)
    # negative on (pi - t0, 2 pi + t0) in phase
    a, b = (math.pi - t0) / (2 * math.pi), (2 * math.pi + t0) / (2 * math.pi)
    neg = -((-math.cos(2 * math.pi * b) + math.cos(2 * math.pi * a)) / (2 * math.pi) + 0.3 * (b - a))
    pos = 0.3 - (-neg)
    exact = pos / neg
    e1 = abs(ratio(1e-2) - exact)
    e2 = abs(ratio(5e-3) - exact)
    assert e1 < 0.05
    assert e2 <= e1 or e2 < 1e-3


def test_metrics_record():
    rec = thrust_metrics(square(2, -1)).to_record("d0", {"t_up_s": 1})
    assert set(rec) == {"design_id", "controller", "TR", "avg_thrust_N", "pos_int", "neg_int", "unbounded"}
    assert rec["TR"] == pytest.approx(2.0) and rec["unbounded"] is False
