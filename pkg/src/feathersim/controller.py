"""Four-segment stroke waveform and its log-ratio parameterization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ControllerError(ValueError):
    pass


@dataclass(frozen=True)
class StrokeController:
    """Periodic trapezoid on the root pitch angle.

    One period is: rise from -A/2 to +A/2 over ``t_up_s`` (upstroke), hold for
    ``t_hold_up_s``, fall back over ``t_down_s`` (downstroke), hold for
    ``t_hold_down_s``.
    """

    t_up_s: float
    t_down_s: float
    t_hold_up_s: float
    t_hold_down_s: float
    amplitude_rad: float = math.radians(60.0)

    def __post_init__(self):
        times = (self.t_up_s, self.t_down_s, self.t_hold_up_s, self.t_hold_down_s)
        if not all(math.isfinite(x) and x >= 0 for x in times):
            raise ControllerError(f"segment times must be finite and >= 0, got {times}")
        if self.t_up_s + self.t_down_s <= 0:
            raise ControllerError("t_up_s + t_down_s must be positive")
        if not math.isfinite(self.amplitude_rad) or self.amplitude_rad < 0:
            raise ControllerError(f"amplitude must be finite and >= 0, got {self.amplitude_rad}")

    @property
    def period_s(self) -> float:
        return self.t_up_s + self.t_hold_up_s + self.t_down_s + self.t_hold_down_s

    @property
    def t_move_s(self) -> float:
        return self.t_up_s + self.t_down_s

    @property
    def t_hold_s(self) -> float:
        return self.t_hold_up_s + self.t_hold_down_s

    def segment_bounds(self) -> tuple[float, float, float, float]:
        """Cycle-relative end times of upstroke, upper hold, downstroke, lower hold."""
        a = self.t_up_s
        b = a + self.t_hold_up_s
        c = b + self.t_down_s
        return a, b, c, self.period_s

    def to_dict(self) -> dict:
        return {
            "t_up_s": self.t_up_s,
            "t_down_s": self.t_down_s,
            "t_hold_up_s": self.t_hold_up_s,
            "t_hold_down_s": self.t_hold_down_s,
            "amplitude_rad": self.amplitude_rad,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StrokeController":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ControllerError(f"unknown controller keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class LogRatioParams:
    log_up_down: float
    log_holds: float
    log_hold_move: float
    period_s: float

    def __post_init__(self):
        vals = (self.log_up_down, self.log_holds, self.log_hold_move, self.period_s)
        if not all(math.isfinite(v) for v in vals):
            raise ControllerError(f"log-ratio parameters must be finite, got {vals}")
        if self.period_s <= 0:
            raise ControllerError(f"period must be positive, got {self.period_s}")

    def as_array(self) -> np.ndarray:
        return np.array([self.log_up_down, self.log_holds, self.log_hold_move])


def baseline_controller(amplitude_rad: float = math.radians(60.0)) -> StrokeController:
    """Symmetric 1.5 s stroke: 0.25 s ramps, 0.5 s holds."""
    return StrokeController(0.25, 0.25, 0.5, 0.5, amplitude_rad)


def _split(total: float, log_ratio: float) -> tuple[float, float]:
    # total * r / (1 + r) written to stay finite for large |log_ratio|
    first = total / (1.0 + math.exp(-log_ratio))
    return first, total - first


def to_controller(p: LogRatioParams, amplitude_rad: float = math.radians(60.0)) -> StrokeController:
    t_hold, t_move = _split(p.period_s, p.log_hold_move)
    t_up, t_down = _split(t_move, p.log_up_down)
    t_hold_up, t_hold_down = _split(t_hold, p.log_holds)
    return StrokeController(t_up, t_down, t_hold_up, t_hold_down, amplitude_rad)


def to_ratios(c: StrokeController) -> LogRatioParams:
    for name in ("t_up_s", "t_down_s", "t_hold_up_s", "t_hold_down_s"):
        if getattr(c, name) <= 0:
            raise ControllerError(f"log undefined for zero segment: {name}")
    return LogRatioParams(
        math.log(c.t_up_s / c.t_down_s),
        math.log(c.t_hold_up_s / c.t_hold_down_s),
        math.log(c.t_hold_s / c.t_move_s),
        c.period_s,
    )


def angle_at(c: StrokeController, t):
    """Root pitch angle at time(s) ``t``; accepts scalars or arrays."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    half = 0.5 * c.amplitude_rad
    a, b, cc, period = c.segment_bounds()
    tau = np.mod(t, period)
    out = np.full_like(tau, -half)
    rise = tau < a
    if c.t_up_s > 0:
        out = np.where(rise, -half + c.amplitude_rad * tau / max(c.t_up_s, 1e-300), out)
    out = np.where((tau >= a) & (tau < b), half, out)
    fall = (tau >= b) & (tau < cc)
    if c.t_down_s > 0:
        out = np.where(fall, half - c.amplitude_rad * (tau - b) / max(c.t_down_s, 1e-300), out)
    return float(out) if scalar else out
