import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from feathersim.controller import StrokeController, angle_at, baseline_controller
from feathersim.geometry import (
    FeatherGeometry,
    FeatherKind,
    FeatherMesh,
    PlateElement,
    build_mesh,
)
from feathersim.hydro import (
    ElementState,
    FluidConfig,
    SimConfig,
    SimulationError,
    ThrustTrace,
    external_force,
    fold_state,
    simulate,
)
from feathersim.metrics import average_thrust, thrust_ratio

from oracles import ChainOracle, rigid_plate_thrust

NEAR_VACUUM = FluidConfig(1e-12, 1.28, 1.0, 9.81)


def plain_mesh(n=8, **kw):
    return build_mesh(FeatherGeometry(FeatherKind.PLAIN, 0.115, 0.075, **kw), n)


def chord_mesh(n=8, **kw):
    return build_mesh(FeatherGeometry(FeatherKind.CHORDWISE_FLAPS, 0.12, 0.075, spine_width_m=0.01, **kw), n)


def span_mesh(n=8, **kw):
    return build_mesh(FeatherGeometry(FeatherKind.SPANWISE_FLAPS, 0.12, 0.075, root_length_m=0.06, **kw), n)


# -- element forces -----------------------------------------------------------

def _state(**kw):
    base = dict(position=np.zeros(3), normal=np.array([0, 0, 1.0]), velocity=np.zeros(3),
                normal_acceleration=0.0, area=0.01, volume=1e-5, mass=9.05e-3)
    base.update(kw)
    return ElementState(**base)


def test_resting_plate_feels_weight_and_buoyancy():
    f = external_force(_state(), FluidConfig())
    assert f[:2] == pytest.approx([0, 0])
    assert f[2] == pytest.approx((1000 * 1e-5 - 9.05e-3) * 9.81)


def test_drag_opposes_normal_velocity():
    fluid = FluidConfig()
    up = external_force(_state(velocity=np.array([0, 0, 0.5]), mass=0.0, volume=0.0), fluid)
    down = external_force(_state(velocity=np.array([0, 0, -0.5]), mass=0.0, volume=0.0), fluid)
    assert up[2] == pytest.approx(-0.5 * 1000 * 1.28 * 0.01 * 0.25)
    assert down[2] == pytest.approx(-up[2])
    # in-plane motion produces no drag
    side = external_force(_state(velocity=np.array([1.0, 0, 0]), mass=0.0, volume=0.0), fluid)
    assert np.allclose(side, 0)


def test_added_mass_opposes_normal_acceleration():
    f = external_force(_state(normal_acceleration=2.0, mass=0.0), FluidConfig(gravity_m_s2=1e-30))
    assert f[2] == pytest.approx(-1000 * 1.0 * 1e-5 * 2.0)


def test_non_finite_state_rejected():
    with pytest.raises(ValueError):
        external_force(_state(velocity=np.array([np.nan, 0, 0])), FluidConfig())


def test_invalid_configs():
    with pytest.raises(ValueError):
        FluidConfig(fluid_density_kg_m3=0.0)
    with pytest.raises(ValueError):
        SimConfig(dt_s=-1.0)
    with pytest.raises(ValueError):
        SimConfig(cycles=1, transient_cycles=1)


# -- statics ---------------------------------------------------------------------

@pytest.mark.parametrize("density", [905.0, 1000.0, 1100.0])
def test_static_thrust_is_net_buoyancy(density):
    mesh = plain_mesh(material_density_kg_m3=density)
    trace = simulate(mesh, baseline_controller(), sim=SimConfig(cycles=3), freeze_after_s=0.0)
    expected = (1000.0 - density) * mesh.total_volume * 9.81
    tail = trace.thrust_N[-len(trace.thrust_N) // 6:]
    assert np.max(np.abs(tail - expected)) < 1e-5


# -- dynamics against the closed-form chain --------------------------------------

@pytest.mark.parametrize("frozen", [True, False], ids=["held-root", "stroking-root"])
def test_chain_dynamics_match_lagrangian_oracle(frozen):
    mesh = plain_mesh(4)
    ctrl = baseline_controller()
    t_end = 0.6
    starts, evaluate = ChainOracle(mesh).run(ctrl, t_end, frozen=frozen)
    errors = []
    for dt in (2e-4, 1e-4):
        trace = simulate(mesh, ctrl, NEAR_VACUUM, SimConfig(dt_s=dt, cycles=1, transient_cycles=0),
                         record_joints=True, freeze_after_s=0.0 if frozen else math.inf)
        n = int(round(t_end / dt))
        t = np.arange(n)[::10] * dt
        q_ref, thrust_ref = evaluate(t)
        away = np.all(np.abs(t[:, None] - starts[None, :]) > 0.01, axis=1)
        eq = np.max(np.abs(trace.joint_angles[:n:10] - q_ref))
        et = np.max(np.abs(trace.thrust_N[:n:10] - thrust_ref)[away])
        errors.append((eq, et))
        assert eq < 0.01 * np.max(np.abs(q_ref[:, 1:]))
        assert et < 0.01 * np.max(np.abs(thrust_ref[away]))
    # first-order convergence toward the oracle
    assert errors[1][0] < 0.6 * errors[0][0]
    assert errors[1][1] < 0.6 * errors[0][1]


def _single_plate_mesh(length=0.1, width=0.05, thickness=4e-4, density=905.0):
    geometry = FeatherGeometry(FeatherKind.PLAIN, length, width, thickness_m=thickness,
                               material_density_kg_m3=density)
    ref = build_mesh(geometry, 2)
    mass = density * length * width * thickness
    elem = PlateElement(
        "plate", (length, width), (length / 2, 0.0, 0.0), mass, length * width,
        length * width * thickness,
        (mass * (width**2 + thickness**2) / 12, mass * (length**2 + thickness**2) / 12,
         mass * (length**2 + width**2) / 12),
    )
    return FeatherMesh(geometry, 1, (elem,), (ref.joints[0],)), elem


def test_rigid_plate_forces_match_closed_form():
    mesh, elem = _single_plate_mesh()
    ctrl = StrokeController(0.3, 0.2, 0.5, 0.5)
    fluid = FluidConfig()
    dt = 1e-4
    trace = simulate(mesh, ctrl, fluid, SimConfig(dt_s=dt, cycles=2, transient_cycles=1))
    rates = {"up": ctrl.amplitude_rad / ctrl.t_up_s, "down": -ctrl.amplitude_rad / ctrl.t_down_s}
    checks = [(0.15, rates["up"]), (0.3 + 0.5 + 0.1, rates["down"]), (0.3 + 0.25, 0.0)]
    for t_mid, omega in checks:
        k = int(round(t_mid / dt))
        # velocity at step k is the difference over [t_k, t_{k+1}]
        theta = float(angle_at(ctrl, k * dt))
        expected = rigid_plate_thrust(theta, omega, elem.centroid[0], elem.mass, elem.area,
                                      elem.volume, fluid.fluid_density_kg_m3,
                                      fluid.drag_coefficient, fluid.gravity_m_s2)
        assert trace.thrust_N[k] == pytest.approx(expected, rel=5e-3, abs=1e-7)


# -- stability, convergence and shape of the solution -----------------------------

def test_energy_never_increases_without_fluid_or_stops():
    trace = simulate(plain_mesh(), baseline_controller(), NEAR_VACUUM, SimConfig(cycles=2),
                     freeze_after_s=0.2)
    k0 = int(round(0.2 / trace.dt_s)) + 2
    energy = trace.kinetic_energy_J[k0:] + trace.potential_energy_J[k0:]
    assert np.all(np.diff(energy) <= 1e-15)
    assert energy[-1] < energy[0]


@pytest.mark.parametrize("mesh_fn", [plain_mesh, chord_mesh, span_mesh], ids=["plain", "chord", "span"])
def test_kinetic_energy_envelope_decays_after_freeze(mesh_fn):
    ctrl = baseline_controller()
    trace = simulate(mesh_fn(), ctrl, sim=SimConfig(cycles=3), freeze_after_s=ctrl.period_s)
    k0 = int(round(ctrl.period_s / trace.dt_s))
    w = int(round(ctrl.period_s / 8 / trace.dt_s))
    ke = trace.kinetic_energy_J[k0:]
    envelope = np.array([ke[i * w:(i + 1) * w].max() for i in range(len(ke) // w)])
    assert np.all(np.diff(envelope) <= 0)
    assert envelope[-1] < 1e-4 * envelope[0]


@pytest.mark.parametrize("mesh_fn", [plain_mesh, chord_mesh, span_mesh], ids=["plain", "chord", "span"])
def test_thrust_is_periodic_after_transient(mesh_fn):
    trace = simulate(mesh_fn(), baseline_controller(), sim=SimConfig(cycles=4))
    n = int(round(trace.period_s / trace.dt_s))
    a, b = trace.thrust_N[2 * n:3 * n], trace.thrust_N[3 * n:4 * n]
    assert np.max(np.abs(a - b)) < 1e-3 * np.max(np.abs(a))


def test_symmetric_stroke_on_neutral_plain_feather_has_small_net_thrust():
    mesh = plain_mesh(material_density_kg_m3=1000.0)
    trace = simulate(mesh, baseline_controller())
    w = trace.thrust_N[trace.window()]
    assert abs(np.mean(w)) <= 0.05 * np.max(np.abs(w))


def test_halving_dt_changes_average_thrust_little():
    mesh = chord_mesh()
    a = average_thrust(simulate(mesh, baseline_controller(), sim=SimConfig(dt_s=2e-4)))
    b = average_thrust(simulate(mesh, baseline_controller(), sim=SimConfig(dt_s=1e-4)))
    assert abs(a - b) < 0.02 * abs(b)


def test_mesh_refinement_changes_average_thrust_modestly():
    a = average_thrust(simulate(chord_mesh(8), baseline_controller()))
    b = average_thrust(simulate(chord_mesh(16), baseline_controller()))
    assert abs(a - b) < 0.1 * abs(b)


def test_downstroke_pushes_up_and_upstroke_pulls_down():
    trace = simulate(plain_mesh(), baseline_controller())
    dt = trace.dt_s
    period = trace.period_s
    mid_up, mid_down = period + 0.125, period + 0.75 + 0.125
    assert trace.thrust_N[int(round(mid_down / dt))] > 0
    assert trace.thrust_N[int(round(mid_up / dt))] < 0


def test_chordwise_flaps_fold_on_upstroke_and_lie_flat_on_downstroke():
    trace = simulate(chord_mesh(), baseline_controller(), record_joints=True)
    period = trace.period_s
    up = np.degrees(fold_state(trace, period + 0.125))
    down = np.degrees(fold_state(trace, period + 0.875))
    assert up.mean() > 30
    assert np.all(np.abs(down) < 5)
    assert fold_state(simulate(plain_mesh(), baseline_controller(), record_joints=True), 1.0).size == 0


def test_fold_state_needs_joint_history():
    trace = simulate(chord_mesh(4), baseline_controller())
    with pytest.raises(ValueError):
        fold_state(trace, 0.5)


def test_one_way_hinges_respect_stop_within_penalty_tolerance():
    trace = simulate(chord_mesh(), baseline_controller(), record_joints=True)
    q = trace.joint_angles[:, list(trace.one_way_joints)]
    assert q.min() > -math.radians(1.0)
    assert q.max() < math.radians(120.0) + math.radians(1.0)


def test_flaps_raise_thrust_ratio_over_plain():
    plain = thrust_ratio(simulate(plain_mesh(), baseline_controller())).value
    for mesh in (chord_mesh(), span_mesh()):
        assert thrust_ratio(simulate(mesh, baseline_controller())).value > plain


def test_unstable_step_reports_diagnostic():
    with pytest.raises(SimulationError, match="smaller dt_s"):
        simulate(chord_mesh(), baseline_controller(), sim=SimConfig(speed_cap_rad_s=1.0))


def test_deterministic_traces():
    a = simulate(span_mesh(), baseline_controller())
    b = simulate(span_mesh(), baseline_controller())
    assert a.to_csv() == b.to_csv()


def test_trace_csv_format():
    trace = ThrustTrace.from_samples([1.0, -2.0, 3.0, 0.5], 0.5, 1.0, transient_cycles=0)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "t_s,thrust_N,cycle_index"
    assert lines[1:] == ["0.0,1.0,0", "0.5,-2.0,0", "1.0,3.0,1", "1.5,0.5,1"]


@given(st.floats(0.05, 0.6), st.floats(0.05, 0.6), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
@settings(max_examples=8, deadline=None)
def test_cycle_window_covers_whole_post_transient_cycles(tu, td, hu, hd):
    ctrl = StrokeController(tu, td, hu, hd)
    trace = simulate(plain_mesh(4), ctrl, sim=SimConfig(dt_s=5e-4, cycles=2))
    w = trace.window()
    n = int(round(ctrl.period_s / trace.dt_s))
    assert abs((w.stop - w.start) - n) <= 1
    assert np.all(np.isfinite(trace.thrust_N))
