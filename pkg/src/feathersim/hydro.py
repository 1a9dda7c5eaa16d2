"""Lumped-parameter fluid-structure simulation of a single feather.

Each plate element carries gravity, buoyancy, quasi-steady normal drag and
added mass. The root pitch follows the stroke controller; the recorded thrust
is the upward force the feather exerts on its mount.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .controller import StrokeController
from .geometry import FeatherMesh


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FluidConfig:
    fluid_density_kg_m3: float = 1000.0
    drag_coefficient: float = 1.28
    added_mass_coefficient: float = 1.0
    gravity_m_s2: float = 9.81

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{k} must be positive, got {v!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "FluidConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown fluid keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SimConfig:
    dt_s: float = 2e-4
    cycles: int = 3
    transient_cycles: int = 1
    speed_cap_rad_s: float = 2000.0

    def __post_init__(self):
        if not (math.isfinite(self.dt_s) and self.dt_s > 0):
            raise ValueError(f"dt_s must be positive, got {self.dt_s}")
        if self.transient_cycles < 0 or self.cycles < self.transient_cycles + 1:
            raise ValueError(
                f"need cycles >= transient_cycles + 1, got {self.cycles}, {self.transient_cycles}"
            )

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown sim keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class ElementState:
    position: np.ndarray
    normal: np.ndarray
    velocity: np.ndarray
    normal_acceleration: float
    area: float
    volume: float
    mass: float


def external_force(state: ElementState, fluid: FluidConfig) -> np.ndarray:
    """Gravity + buoyancy + quadratic normal drag + added mass on one plate.

    Drag acts along the plate normal and opposes the normal velocity
    ``v_n``: ``-0.5 rho C_D S |v_n| v_n``. Added mass opposes the normal
    acceleration with mass ``rho C_a V``.
    """
    vals = [state.normal_acceleration, state.area, state.volume, state.mass]
    vecs = [state.position, state.normal, state.velocity]
    if not all(math.isfinite(v) for v in vals) or not all(np.all(np.isfinite(v)) for v in vecs):
        raise ValueError("element state contains non-finite values")
    n = np.asarray(state.normal, dtype=float)
    n = n / np.linalg.norm(n)
    rho = fluid.fluid_density_kg_m3
    g = fluid.gravity_m_s2
    zhat = np.array([0.0, 0.0, 1.0])
    f_gravity = -state.mass * g * zhat
    f_buoyancy = rho * state.volume * g * zhat
    vn = float(np.dot(state.velocity, n))
    f_drag = -0.5 * rho * fluid.drag_coefficient * state.area * abs(vn) * vn * n
    f_added = -rho * fluid.added_mass_coefficient * state.volume * state.normal_acceleration * n
    return f_gravity + f_buoyancy + f_drag + f_added


@dataclass(frozen=True)
class ThrustTrace:
    times_s: np.ndarray
    thrust_N: np.ndarray
    period_s: float
    cycle_boundaries: np.ndarray
    dt_s: float
    transient_cycles: int = 1
    kinetic_energy_J: np.ndarray | None = None
    potential_energy_J: np.ndarray | None = None
    joint_angles: np.ndarray | None = field(default=None, repr=False)
    one_way_joints: tuple[int, ...] = ()

    @classmethod
    def from_samples(cls, thrust, dt_s: float, period_s: float, transient_cycles: int = 1, **kw):
        thrust = np.asarray(thrust, dtype=float)
        n = len(thrust)
        times = np.arange(n) * dt_s
        n_cycles = int(round(n * dt_s / period_s))
        bounds = np.array([int(round(k * period_s / dt_s)) for k in range(n_cycles)], dtype=int)
        return cls(times, thrust, period_s, bounds, dt_s, transient_cycles, **kw)

    @property
    def n_cycles(self) -> int:
        return len(self.cycle_boundaries)

    def cycle_index(self) -> np.ndarray:
        idx = np.zeros(len(self.thrust_N), dtype=int)
        for k, b in enumerate(self.cycle_boundaries):
            idx[b:] = k
        return idx

    def window(self) -> slice:
        """Sample slice covering whole post-transient cycles."""
        if self.n_cycles <= self.transient_cycles:
            raise ValueError(
                f"trace has {self.n_cycles} cycles; need more than "
                f"{self.transient_cycles} transient cycles"
            )
        start = int(self.cycle_boundaries[self.transient_cycles])
        stop = int(round(self.n_cycles * self.period_s / self.dt_s))
        stop = min(stop, len(self.thrust_N))
        if stop <= start:
            raise ValueError("empty post-transient window")
        return slice(start, stop)

    def scaled(self, alpha: float) -> "ThrustTrace":
        return ThrustTrace(
            self.times_s, alpha * self.thrust_N, self.period_s, self.cycle_boundaries,
            self.dt_s, self.transient_cycles,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_s", "thrust_N", "cycle_index"])
        for t, f, k in zip(self.times_s, self.thrust_N, self.cycle_index()):
            writer.writerow([repr(float(t)), repr(float(f)), int(k)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _mesh_args(mesh: FeatherMesh):
    a = mesh.arrays()
    return (
        a.parent, a.origin, a.axis, a.com, a.mass, a.inertia, a.area, a.volume,
        a.joint_kind, a.stiffness, a.damping, a.lower, a.upper, a.stop_stiffness, a.stop_damping,
    )


def _wave(controller: StrokeController) -> np.ndarray:
    return np.array([
        controller.t_up_s, controller.t_hold_up_s, controller.t_down_s,
        controller.t_hold_down_s, controller.amplitude_rad,
    ])


def _raise_for_status(status: int, step: int, dt: float) -> None:
    if status == _kernel.OK:
        return
    what = "non-finite state" if status == _kernel.NONFINITE else "joint speed above cap"
    raise SimulationError(
        f"simulation unstable at step {step} (t={step * dt:.6g} s): {what}; "
        f"try a smaller dt_s than {dt:g}"
    )


def simulate(
    mesh: FeatherMesh,
    controller: StrokeController,
    fluid: FluidConfig | None = None,
    sim: SimConfig | None = None,
    *,
    record_joints: bool = False,
    freeze_after_s: float = math.inf,
) -> ThrustTrace:
    """Run the feather for ``sim.cycles`` periods and return the root thrust.

    ``freeze_after_s`` holds the root at its angle from that time on.
    """
    fluid = fluid or FluidConfig()
    sim = sim or SimConfig()
    period = controller.period_s
    nsteps = int(round(sim.cycles * period / sim.dt_s))
    status, step, thrust, ke, pe, q_hist = _kernel.simulate_feather(
        *_mesh_args(mesh),
        _wave(controller), float(freeze_after_s),
        fluid.fluid_density_kg_m3, fluid.drag_coefficient, fluid.added_mass_coefficient,
        fluid.gravity_m_s2, sim.dt_s, nsteps, sim.speed_cap_rad_s, record_joints,
    )
    _raise_for_status(status, step, sim.dt_s)
    return ThrustTrace.from_samples(
        thrust, sim.dt_s, period, sim.transient_cycles,
        kinetic_energy_J=ke,
        potential_energy_J=pe,
        joint_angles=q_hist if record_joints else None,
        one_way_joints=mesh.one_way_joints,
    )


def fold_state(trace: ThrustTrace, t: float) -> np.ndarray:
    """One-way hinge fold angles (rad) at the sample nearest ``t``.

    Zero is flat against the stop; positive is folded. Requires a trace run
    with ``record_joints=True``.
    """
    if not trace.one_way_joints:
        return np.zeros(0)
    if trace.joint_angles is None:
        raise ValueError("trace has no joint history; simulate with record_joints=True")
    k = int(round(t / trace.dt_s))
    k = min(max(k, 0), len(trace.thrust_N) - 1)
    return trace.joint_angles[k, list(trace.one_way_joints)].copy()
