"""Scalar thrust objectives computed over whole post-transient cycles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hydro import ThrustTrace

DEFAULT_EPSILON_NS = 1e-9


class MetricsError(ValueError):
    pass


@dataclass(frozen=True, order=False)
class ThrustRatio:
    """Positive-to-negative impulse ratio.

    ``unbounded`` marks a window with (almost) no negative impulse; ``value``
    is then ``inf`` and ``numerator`` keeps the positive impulse.
    """

    value: float
    numerator: float
    denominator: float
    unbounded: bool = False

    def __float__(self) -> float:
        return self.value

    def sort_key(self) -> tuple:
        # unbounded ratios rank above every finite ratio, larger impulse first
        return (1, self.numerator) if self.unbounded else (0, self.value)


@dataclass(frozen=True)
class ThrustMetrics:
    thrust_ratio: ThrustRatio
    average_thrust_N: float
    positive_integral_Ns: float
    negative_integral_Ns: float

    def to_record(self, design_id: str, controller: dict) -> dict:
        tr = self.thrust_ratio
        return {
            "design_id": design_id,
            "controller": controller,
            "TR": None if tr.unbounded else tr.value,
            "avg_thrust_N": self.average_thrust_N,
            "pos_int": self.positive_integral_Ns,
            "neg_int": self.negative_integral_Ns,
            "unbounded": tr.unbounded,
        }


def _window(trace: ThrustTrace) -> np.ndarray:
    try:
        return trace.thrust_N[trace.window()]
    except ValueError as exc:
        raise MetricsError(str(exc)) from None


def average_thrust(trace: ThrustTrace) -> float:
    """Mean of the post-transient samples."""
    samples = _window(trace)
    return float(np.mean(samples))


def impulses(trace: ThrustTrace) -> tuple[float, float]:
    """Rectangle-rule integrals of the positive and |negative| samples (N s)."""
    samples = _window(trace)
    pos = float(np.sum(samples[samples > 0])) * trace.dt_s
    neg = float(-np.sum(samples[samples < 0])) * trace.dt_s
    return pos, neg


def thrust_ratio(trace: ThrustTrace, epsilon_Ns: float = DEFAULT_EPSILON_NS) -> ThrustRatio:
    if epsilon_Ns < 0:
        raise MetricsError("epsilon_Ns must be non-negative")
    pos, neg = impulses(trace)
    if neg <= epsilon_Ns:
        return ThrustRatio(math.inf, pos, neg, unbounded=True)
    return ThrustRatio(pos / neg, pos, neg)


def thrust_metrics(trace: ThrustTrace, epsilon_Ns: float = DEFAULT_EPSILON_NS) -> ThrustMetrics:
    pos, neg = impulses(trace)
    return ThrustMetrics(
        thrust_ratio=thrust_ratio(trace, epsilon_Ns),
        average_thrust_N=average_thrust(trace),
        positive_integral_Ns=pos,
        negative_integral_Ns=neg,
    )


def normalized_design_ratio(trace_full: ThrustTrace, trace_reference: ThrustTrace) -> float:
    """Average thrust of a full feather over that of its spine- or root-only reference."""
    ref = average_thrust(trace_reference)
    if abs(ref) < 1e-12:
        raise MetricsError(f"reference average thrust {ref:.3g} N is too small to normalize by")
    return average_thrust(trace_full) / ref
