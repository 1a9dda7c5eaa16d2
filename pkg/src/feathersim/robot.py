"""Rail-constrained swim of a robot carrying two identical feathers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .controller import StrokeController
from .geometry import FeatherMesh
from .hydro import FluidConfig, SimConfig, _mesh_args, _raise_for_status, _wave


@dataclass(frozen=True)
class RobotBody:
    """Lumped body riding the rail. Defaults are invented desk-scale values."""

    mass_kg: float = 0.5
    body_drag_coefficient: float = 1.0
    frontal_area_m2: float = 0.003
    rail_friction_N: float = 0.05
    n_feathers: int = 2

    def __post_init__(self):
        for k in ("mass_kg", "body_drag_coefficient", "frontal_area_m2", "rail_friction_N"):
            v = getattr(self, k)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be finite and >= 0, got {v!r}")
        if self.mass_kg <= 0:
            raise ValueError("mass_kg must be > 0")
        if self.n_feathers < 1:
            raise ValueError("n_feathers must be >= 1")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "RobotBody":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown robot keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SwimTrace:
    times_s: np.ndarray
    position_m: np.ndarray
    velocity_m_s: np.ndarray
    thrust_N: np.ndarray  # per-feather thrust along the rail
    distance_m: float
    finished: bool

    @property
    def elapsed_s(self) -> float:
        return float(self.times_s[-1])

    @property
    def distance_achieved_m(self) -> float:
        return float(self.position_m[-1])

    @property
    def average_velocity_m_s(self) -> float:
        """Distance over elapsed time; for an unfinished run, distance achieved over the cap."""
        if self.elapsed_s <= 0:
            return 0.0
        return self.distance_achieved_m / self.elapsed_s

    def summary(self) -> dict:
        return {
            "finished": self.finished,
            "status": "finished" if self.finished else "did not finish",
            "distance_m": self.distance_m,
            "distance_achieved_m": self.distance_achieved_m,
            "elapsed_s": self.elapsed_s,
            "average_velocity_m_s": self.average_velocity_m_s,
        }

    def to_csv(self, stride: int = 1) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_s", "position_m", "velocity_m_s"])
        for t, x, v in zip(self.times_s[::stride], self.position_m[::stride], self.velocity_m_s[::stride]):
            writer.writerow([repr(float(t)), repr(float(x)), repr(float(v))])
        return buf.getvalue()

    def write_csv(self, path, stride: int = 1) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv(stride))


def swim(
    body: RobotBody,
    mesh: FeatherMesh,
    controller: StrokeController,
    fluid: FluidConfig | None = None,
    sim: SimConfig | None = None,
    distance_m: float = 0.30,
    time_cap_s: float = 60.0,
) -> SwimTrace:
    """Integrate the rail motion until ``distance_m`` is covered or the time cap.

    The feathers push along the rail; the rail carries weight and buoyancy,
    so gravity is left out of the feather model here. The body velocity is
    fed back each step as a uniform flow over the feather.
    """
    if not (math.isfinite(distance_m) and distance_m > 0):
        raise ValueError(f"distance_m must be positive, got {distance_m}")
    if not (math.isfinite(time_cap_s) and time_cap_s > 0):
        raise ValueError(f"time_cap_s must be positive, got {time_cap_s}")
    fluid = fluid or FluidConfig()
    sim = sim or SimConfig()
    max_steps = int(math.ceil(time_cap_s / sim.dt_s))
    status, fail, steps, pos, vel, thrust = _kernel.simulate_swim(
        *_mesh_args(mesh),
        _wave(controller),
        fluid.fluid_density_kg_m3, fluid.drag_coefficient, fluid.added_mass_coefficient,
        0.0, sim.dt_s, max_steps, sim.speed_cap_rad_s,
        body.n_feathers, body.mass_kg, body.body_drag_coefficient, body.frontal_area_m2,
        body.rail_friction_N, distance_m,
    )
    _raise_for_status(status, fail, sim.dt_s)
    finished = pos[steps] >= distance_m
    times = np.arange(steps + 1) * sim.dt_s
    return SwimTrace(
        times, pos[: steps + 1].copy(), vel[: steps + 1].copy(), thrust[:steps].copy(),
        float(distance_m), bool(finished),
    )
