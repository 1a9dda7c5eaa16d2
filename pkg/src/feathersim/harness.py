"""Config-driven experiment runs: mesh, simulate, sweep, optimize, validate, swim.

Every run writes under ``<output_dir>/<name>/`` and starts with a manifest
holding the config hash, seed and package version. Outputs contain no
timestamps, so identical configs and seeds give byte-identical files.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import __version__
from .bayesopt import SearchSpace, optimize
from .controller import (
    ControllerError,
    LogRatioParams,
    StrokeController,
    baseline_controller,
    to_controller,
    to_ratios,
)
from .geometry import FeatherGeometry, FeatherKind, GeometryError, MaterialModel, build_mesh, ratio_of
from .hydro import FluidConfig, SimConfig, SimulationError, ThrustTrace, simulate
from .metrics import MetricsError, average_thrust, thrust_metrics, thrust_ratio
from .robot import RobotBody, swim

TR_CAP = 100.0


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (usage error)."""


# ---------------------------------------------------------------- schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

GEOMETRY_SCHEMA = {
    "type": "object",
    "required": ["kind", "length_m", "width_m"],
    "properties": {
        "kind": {"enum": [k.value for k in FeatherKind]},
        "length_m": _POS,
        "width_m": _POS,
        "spine_width_m": {"type": ["number", "null"]},
        "root_length_m": {"type": ["number", "null"]},
        "thickness_m": _POS,
        "material_density_kg_m3": _POS,
    },
    "additionalProperties": False,
}

CONTROLLER_SCHEMA = {
    "oneOf": [
        {"const": "baseline"},
        {
            "type": "object",
            "required": ["t_up_s", "t_down_s", "t_hold_up_s", "t_hold_down_s"],
            "properties": {
                "t_up_s": _NUM, "t_down_s": _NUM, "t_hold_up_s": _NUM,
                "t_hold_down_s": _NUM, "amplitude_rad": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["log_ratios", "period_s"],
            "properties": {
                "log_ratios": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
                "period_s": _POS,
                "amplitude_rad": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
    ]
}

_COMMON = {
    "name": {"type": "string", "pattern": r"^[A-Za-z0-9_.-]+$"},
    "output_dir": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "workers": {"type": "integer", "minimum": 1},
    "spanwise_elements": {"type": "integer", "minimum": 2},
    "fluid": {
        "type": "object",
        "properties": {k: _POS for k in FluidConfig.__dataclass_fields__},
        "additionalProperties": False,
    },
    "sim": {
        "type": "object",
        "properties": {
            "dt_s": _POS, "cycles": {"type": "integer", "minimum": 1},
            "transient_cycles": {"type": "integer", "minimum": 0}, "speed_cap_rad_s": _POS,
        },
        "additionalProperties": False,
    },
    "material": {
        "type": "object",
        "properties": {k: _POS for k in MaterialModel.__dataclass_fields__},
        "additionalProperties": False,
    },
}


def _schema(required: list[str], extra: dict) -> dict:
    return {
        "type": "object",
        "required": ["name", *required],
        "properties": {**_COMMON, **extra},
        "additionalProperties": False,
    }


_INCUMBENT_REF = {"type": "string"}

SCHEMAS: dict[str, dict] = {
    "mesh": _schema(["geometry"], {"geometry": GEOMETRY_SCHEMA}),
    "simulate": _schema(["geometry", "controller"], {
        "geometry": GEOMETRY_SCHEMA,
        "controller": CONTROLLER_SCHEMA,
        "record_joints": {"type": "boolean"},
    }),
    "sweep": _schema(["morphology"], {
        "morphology": {"enum": ["chordwise", "spanwise"]},
        "length_m": _POS,
        "width_m": _POS,
        "widths_m": {"type": "array", "items": _POS, "minItems": 1},
        "lengths_m": {"type": "array", "items": _POS, "minItems": 1},
        "spine_width_m": _POS,
        "root_length_m": _POS,
        "t_up_s": {"type": "array", "items": _POS, "minItems": 1},
        "t_down_s": {"type": "array", "items": _POS, "minItems": 1},
        "t_hold_s": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    }),
    "optimize": _schema(["geometry"], {
        "geometry": GEOMETRY_SCHEMA,
        "search_space": {
            "type": "object",
            "properties": {
                "bounds": {"type": "array", "items": {"type": "array", "items": _NUM,
                                                      "minItems": 2, "maxItems": 2},
                           "minItems": 3, "maxItems": 3},
                "period_s": _POS,
            },
            "additionalProperties": False,
        },
        "budget": {"type": "integer", "minimum": 1},
        "n_initial": {"type": "integer", "minimum": 1},
        "directions": {"type": "array", "items": {"enum": ["max", "min"]}, "minItems": 1,
                       "uniqueItems": True},
        "exploration_ratio": {"type": "number", "minimum": 0, "maximum": 1},
        "noise_std": {"type": "number", "minimum": 0},
        "tr_cap": _POS,
    }),
    "validate": _schema(["designs"], {
        "designs": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "required": ["label", "geometry", "incumbents"],
                "properties": {"label": {"type": "string"}, "geometry": GEOMETRY_SCHEMA,
                               "incumbents": _INCUMBENT_REF},
                "additionalProperties": False,
            },
        },
        "repetitions": {"type": "integer", "minimum": 1},
        "noise_std": {"type": "number", "minimum": 0},
    }),
    "swim": _schema(["geometry"], {
        "geometry": GEOMETRY_SCHEMA,
        "controllers": {"type": "object", "additionalProperties": CONTROLLER_SCHEMA, "minProperties": 1},
        "incumbents": _INCUMBENT_REF,
        "body": {
            "type": "object",
            "properties": {
                "mass_kg": _POS, "body_drag_coefficient": {"type": "number", "minimum": 0},
                "frontal_area_m2": {"type": "number", "minimum": 0},
                "rail_friction_N": {"type": "number", "minimum": 0},
                "n_feathers": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "distance_m": _POS,
        "time_cap_s": _POS,
        "csv_stride": {"type": "integer", "minimum": 1},
    }),
}

COMMANDS = tuple(SCHEMAS)


# ---------------------------------------------------------------- config handling

def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {path}: {exc}") from None


def validate_config(command: str, config: dict) -> None:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {command} config at {where}: {exc.message}") from None


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _geometry(d: dict) -> FeatherGeometry:
    try:
        return FeatherGeometry.from_dict(d)
    except GeometryError as exc:
        raise ConfigError(f"invalid geometry: {exc}") from None


def parse_controller(entry) -> StrokeController:
    try:
        if entry == "baseline":
            return baseline_controller()
        if "log_ratios" in entry:
            c = to_controller(LogRatioParams(*entry["log_ratios"], entry["period_s"]))
            if "amplitude_rad" in entry:
                c = StrokeController(c.t_up_s, c.t_down_s, c.t_hold_up_s, c.t_hold_down_s,
                                     entry["amplitude_rad"])
            return c
        return StrokeController.from_dict(entry)
    except ControllerError as exc:
        raise ConfigError(f"invalid controller: {exc}") from None


def controller_record(c: StrokeController) -> dict:
    """Absolute segment times plus log ratios where they exist."""
    rec = c.to_dict()
    try:
        p = to_ratios(c)
        rec["log_ratios"] = [p.log_up_down, p.log_holds, p.log_hold_move]
    except ControllerError:
        rec["log_ratios"] = None
    return rec


@dataclass(frozen=True)
class RunContext:
    command: str
    config: dict
    seed: int
    out: Path
    fluid: FluidConfig
    sim: SimConfig
    material: MaterialModel
    spanwise_elements: int
    workers: int

    def mesh(self, geometry: FeatherGeometry):
        try:
            return build_mesh(geometry, self.spanwise_elements, self.material)
        except GeometryError as exc:
            raise ConfigError(f"cannot mesh geometry: {exc}") from None


def prepare(command: str, config: dict, seed: int | None = None, output_dir=None) -> RunContext:
    """Validate a config, apply overrides and create the output directory."""
    config = copy.deepcopy(config)
    validate_config(command, config)
    if seed is not None:
        config["seed"] = int(seed)
    if output_dir is not None:
        config["output_dir"] = str(output_dir)
    try:
        fluid = FluidConfig.from_dict(config.get("fluid", {}))
        sim = SimConfig.from_dict(config.get("sim", {}))
        material = MaterialModel.from_dict(config.get("material", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    out = Path(config.get("output_dir", "out")) / config["name"]
    out.mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(exist_ok=True)
    ctx = RunContext(
        command, config, int(config.get("seed", 0)), out, fluid, sim, material,
        int(config.get("spanwise_elements", 8)), int(config.get("workers", os.cpu_count() or 1)),
    )
    manifest = {
        "command": command,
        "name": config["name"],
        "config": config,
        "config_sha256": config_hash(config),
        "seed": ctx.seed,
        "version": __version__,
    }
    (out / "manifest.json").write_text(_dumps(manifest))
    return ctx


def _pool_map(fn: Callable, items: list, workers: int) -> list:
    """Order-preserving map, in-process for a single worker."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands

def run_mesh(ctx: RunContext) -> dict:
    geometry = _geometry(ctx.config["geometry"])
    mesh = ctx.mesh(geometry)
    (ctx.out / "mesh.json").write_text(mesh.to_json() + "\n")
    summary = {
        "elements": len(mesh.elements),
        "joints": len(mesh.joints),
        "one_way_joints": list(mesh.one_way_joints),
        "total_area_m2": mesh.total_area,
        "total_mass_kg": mesh.total_mass,
    }
    (ctx.out / "metrics.json").write_text(_dumps(summary))
    return summary


def run_simulate(ctx: RunContext) -> dict:
    geometry = _geometry(ctx.config["geometry"])
    controller = parse_controller(ctx.config["controller"])
    trace = simulate(ctx.mesh(geometry), controller, ctx.fluid, ctx.sim,
                     record_joints=bool(ctx.config.get("record_joints", False)))
    trace.write_csv(ctx.out / "traces" / "trace.csv")
    record = thrust_metrics(trace).to_record(ctx.config["name"], controller_record(controller))
    (ctx.out / "metrics.json").write_text(_dumps(record))
    return record


def sweep_geometries(config: dict) -> list[tuple[FeatherGeometry, FeatherGeometry]]:
    """(full, reference) geometry pairs for a sweep config.

    Chordwise sweeps vary the overall width at fixed length against a
    spine-only reference; spanwise sweeps vary the length at fixed width
    against a root-only reference. A spanwise length equal to the root
    length has no flap and is run as the plain reference itself.
    """
    pairs = []
    if config["morphology"] == "chordwise":
        length = config.get("length_m", 0.12)
        spine = config.get("spine_width_m", 0.01)
        widths = config.get("widths_m") or [round(0.015 + 0.005 * k, 10) for k in range(22)]
        ref = FeatherGeometry(FeatherKind.PLAIN, length, spine)
        for w in widths:
            pairs.append((_geometry({"kind": "chordwise", "length_m": length, "width_m": w,
                                     "spine_width_m": spine}), ref))
    else:
        width = config.get("width_m", 0.12)
        root = config.get("root_length_m", 0.06)
        lengths = config.get("lengths_m") or [round(0.06 + 0.01 * k, 10) for k in range(13)]
        ref = FeatherGeometry(FeatherKind.PLAIN, root, width)
        for l in lengths:
            if math.isclose(l, root, rel_tol=1e-9):
                pairs.append((ref, ref))
            else:
                pairs.append((_geometry({"kind": "spanwise", "length_m": l, "width_m": width,
                                         "root_length_m": root}), ref))
    return pairs


def sweep_controllers(config: dict) -> list[StrokeController]:
    """Segment-time grid; each hold takes the grid's hold value."""
    out = []
    for tu in config.get("t_up_s", [0.1, 0.5]):
        for td in config.get("t_down_s", [0.5, 1.0]):
            for th in config.get("t_hold_s", [0.0, 0.5, 1.0]):
                try:
                    out.append(StrokeController(tu, td, th, th))
                except ControllerError as exc:
                    raise ConfigError(f"invalid sweep controller: {exc}") from None
    return out


@dataclass(frozen=True)
class _Job:
    geometry: FeatherGeometry
    controller: StrokeController
    fluid: FluidConfig
    sim: SimConfig
    material: MaterialModel
    elements: int


def _run_job(job: _Job) -> dict:
    try:
        mesh = build_mesh(job.geometry, job.elements, job.material)
        trace = simulate(mesh, job.controller, job.fluid, job.sim)
        m = thrust_metrics(trace)
        return {"ok": True, "avg_thrust_N": m.average_thrust_N,
                "TR": None if m.thrust_ratio.unbounded else m.thrust_ratio.value,
                "unbounded": m.thrust_ratio.unbounded, "error": ""}
    except (SimulationError, MetricsError, GeometryError) as exc:
        return {"ok": False, "avg_thrust_N": None, "TR": None, "unbounded": False, "error": str(exc)}


SWEEP_COLUMNS = [
    "row", "kind", "length_m", "width_m", "spine_width_m", "root_length_m", "width_ratio",
    "length_ratio", "t_up_s", "t_down_s", "t_hold_up_s", "t_hold_down_s", "avg_thrust_N", "TR",
    "normalized_design_ratio", "status",
]


def run_sweep(ctx: RunContext) -> dict:
    """Simulate every (geometry, controller) pair and its reference.

    Failures are kept as rows with status ``failed: ...``; the sweep goes on.
    """
    pairs = sweep_geometries(ctx.config)
    controllers = sweep_controllers(ctx.config)
    refs = sorted({ref for _, ref in pairs}, key=lambda g: json.dumps(g.to_dict(), sort_keys=True))
    jobs = [_Job(g, c, ctx.fluid, ctx.sim, ctx.material, ctx.spanwise_elements)
            for g, _ in pairs for c in controllers]
    ref_jobs = [_Job(r, c, ctx.fluid, ctx.sim, ctx.material, ctx.spanwise_elements)
                for r in refs for c in controllers]
    results = _pool_map(_run_job, jobs + ref_jobs, ctx.workers)
    full, ref_res = results[: len(jobs)], results[len(jobs):]
    ref_avg = {}
    for job, res in zip(ref_jobs, ref_res):
        ref_avg[(job.geometry, job.controller)] = res

    rows = []
    for k, (job, res) in enumerate(zip(jobs, full)):
        g, c = job.geometry, job.controller
        ref = pairs[k // len(controllers)][1]
        rr = ref_avg[(ref, c)]
        status, ratio = "ok", None
        if not res["ok"]:
            status = f"failed: {res['error']}"
        elif not rr["ok"]:
            status = f"reference failed: {rr['error']}"
        elif abs(rr["avg_thrust_N"]) < 1e-12:
            status = "reference thrust too small to normalize"
        else:
            ratio = res["avg_thrust_N"] / rr["avg_thrust_N"]
        desc = ratio_of(g)
        rows.append({
            "row": k, "kind": g.kind.value, "length_m": g.length_m, "width_m": g.width_m,
            "spine_width_m": g.spine_width_m if g.kind is FeatherKind.CHORDWISE_FLAPS else None,
            "root_length_m": g.root_length_m if g.kind is FeatherKind.SPANWISE_FLAPS else None,
            "width_ratio": desc.width_ratio, "length_ratio": desc.length_ratio,
            "t_up_s": c.t_up_s, "t_down_s": c.t_down_s, "t_hold_up_s": c.t_hold_up_s,
            "t_hold_down_s": c.t_hold_down_s, "avg_thrust_N": res["avg_thrust_N"], "TR": res["TR"],
            "normalized_design_ratio": ratio, "status": status,
        })

    with open(ctx.out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                             for k, v in r.items()})

    best = []
    for i, (g, _) in enumerate(pairs):
        block = rows[i * len(controllers): (i + 1) * len(controllers)]
        vals = [r["normalized_design_ratio"] for r in block if r["normalized_design_ratio"] is not None]
        desc = ratio_of(g)
        best.append({
            "length_m": g.length_m, "width_m": g.width_m,
            "width_ratio": desc.width_ratio, "length_ratio": desc.length_ratio,
            "max_normalized_design_ratio": max(vals) if vals else None,
        })
    summary = {
        "morphology": ctx.config["morphology"],
        "rows": len(rows),
        "failed_rows": sum(r["status"] != "ok" for r in rows),
        "max_ratio_per_geometry": best,
    }
    (ctx.out / "metrics.json").write_text(_dumps(summary))
    return summary


def capped_ratio(trace: ThrustTrace, cap: float = TR_CAP) -> float:
    """Thrust ratio with unbounded values mapped to ``cap`` so the GP stays finite."""
    tr = thrust_ratio(trace)
    return cap if tr.unbounded else min(tr.value, cap)


def tr_objective(mesh, space: SearchSpace, fluid: FluidConfig, sim: SimConfig,
                 cap: float = TR_CAP) -> Callable[[np.ndarray], float]:
    def objective(x: np.ndarray) -> float:
        c = to_controller(LogRatioParams(*x, space.period_s))
        return capped_ratio(simulate(mesh, c, fluid, sim), cap)
    return objective


def run_optimize(ctx: RunContext) -> dict:
    cfg = ctx.config
    geometry = _geometry(cfg["geometry"])
    mesh = ctx.mesh(geometry)
    try:
        space = SearchSpace.from_dict(cfg["search_space"]) if "search_space" in cfg else SearchSpace.default()
    except ValueError as exc:
        raise ConfigError(f"invalid search space: {exc}") from None
    budget = cfg.get("budget", 30)
    n_initial = cfg.get("n_initial", 5)
    if budget < n_initial:
        raise ConfigError(f"budget {budget} is smaller than n_initial {n_initial}")
    objective = tr_objective(mesh, space, ctx.fluid, ctx.sim, cfg.get("tr_cap", TR_CAP))

    lines, incumbents = [], {}
    for direction in cfg.get("directions", ["max", "min"]):
        state = optimize(
            objective, space, budget=budget, seed=ctx.seed, direction=direction,
            exploration_ratio=cfg.get("exploration_ratio", 0.6), n_initial=n_initial,
            noise_std=cfg.get("noise_std", 0.0),
        )
        for entry in state.log:
            c = to_controller(LogRatioParams(*entry["x"], space.period_s))
            lines.append({**entry, "direction": direction, "controller": c.to_dict()})
        x, y = state.incumbent
        label = "best" if direction == "max" else "worst"
        incumbents[label] = {
            "log_ratios": [float(v) for v in x],
            "period_s": space.period_s,
            "controller": to_controller(LogRatioParams(*x, space.period_s)).to_dict(),
            "TR": float(y),
        }
    with open(ctx.out / "optlog.jsonl", "w") as fh:
        for entry in lines:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    result = {"geometry": geometry.to_dict(), "search_space": space.to_dict(), **incumbents}
    (ctx.out / "incumbents.json").write_text(_dumps(result))
    (ctx.out / "metrics.json").write_text(_dumps(incumbents))
    return result


def load_incumbents(path, base: Path | None = None) -> dict:
    p = Path(path)
    if base is not None and not p.is_absolute() and not p.exists():
        p = base / p
    if p.is_dir():
        p = p / "incumbents.json"
    if not p.exists():
        raise ConfigError(f"missing optimizer output: {p} (run `optimize` first)")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"unreadable optimizer output {p}: {exc}") from None
    for label in ("best", "worst"):
        if label not in data:
            raise ConfigError(f"optimizer output {p} has no '{label}' controller; "
                              f"optimize with directions ['max', 'min']")
    return data


@dataclass(frozen=True)
class _RepJob:
    job: _Job
    noise_std: float
    seed: int


def _run_rep(rj: _RepJob) -> tuple[float, float, bool]:
    mesh = build_mesh(rj.job.geometry, rj.job.elements, rj.job.material)
    trace = simulate(mesh, rj.job.controller, rj.job.fluid, rj.job.sim)
    if rj.noise_std > 0:
        rng = np.random.default_rng(rj.seed)
        trace = ThrustTrace(
            trace.times_s, trace.thrust_N + rng.normal(0.0, rj.noise_std, trace.thrust_N.shape),
            trace.period_s, trace.cycle_boundaries, trace.dt_s, trace.transient_cycles,
        )
    tr = thrust_ratio(trace)
    return tr.value, average_thrust(trace), tr.unbounded


def run_validation(ctx: RunContext, base: Path | None = None) -> dict:
    """Best, baseline and worst controllers on each design, repeated.

    Without observation noise the repetitions are identical, so each cell
    is simulated once and reported with zero spread.
    """
    cfg = ctx.config
    reps = cfg.get("repetitions", 10)
    noise = cfg.get("noise_std", 0.0)
    sim = SimConfig(ctx.sim.dt_s, max(ctx.sim.cycles, 5 + ctx.sim.transient_cycles),
                    ctx.sim.transient_cycles, ctx.sim.speed_cap_rad_s)
    cells = []
    for design in cfg["designs"]:
        geometry = _geometry(design["geometry"])
        ctx.mesh(geometry)  # surface meshing errors before any compute
        inc = load_incumbents(design["incumbents"], base)
        for label, c in (("best", parse_controller(inc["best"]["controller"])),
                         ("baseline", baseline_controller()),
                         ("worst", parse_controller(inc["worst"]["controller"]))):
            cells.append((design["label"], label, geometry, c))
    n_runs = reps if noise > 0 else 1
    rep_jobs = [
        _RepJob(_Job(g, c, ctx.fluid, sim, ctx.material, ctx.spanwise_elements), noise,
                ctx.seed * 1_000_003 + i * 1009 + r)
        for i, (_, _, g, c) in enumerate(cells) for r in range(n_runs)
    ]
    results = _pool_map(_run_rep, rep_jobs, ctx.workers)
    table = []
    for i, (design, label, _, c) in enumerate(cells):
        chunk = results[i * n_runs: (i + 1) * n_runs]
        trs = np.array([r[0] for r in chunk])
        avg = np.array([r[1] for r in chunk])
        unbounded = any(r[2] for r in chunk)
        table.append({
            "design": design,
            "controller_label": label,
            "controller": controller_record(c),
            "repetitions": reps,
            "TR_mean": None if unbounded else float(trs.mean()),
            "TR_std": None if unbounded else float(trs.std()),
            "TR_unbounded": unbounded,
            "avg_thrust_N_mean": float(avg.mean()),
            "avg_thrust_N_std": float(avg.std()),
        })
    (ctx.out / "metrics.json").write_text(_dumps({"validation": table}))
    return {"validation": table}


def run_swim(ctx: RunContext, base: Path | None = None) -> dict:
    cfg = ctx.config
    geometry = _geometry(cfg["geometry"])
    mesh = ctx.mesh(geometry)
    controllers: dict[str, StrokeController] = {}
    if "incumbents" in cfg:
        inc = load_incumbents(cfg["incumbents"], base)
        controllers["best"] = parse_controller(inc["best"]["controller"])
        controllers["worst"] = parse_controller(inc["worst"]["controller"])
    for label, entry in sorted(cfg.get("controllers", {}).items()):
        controllers[label] = parse_controller(entry)
    if not controllers:
        raise ConfigError("swim config needs 'controllers' or 'incumbents'")
    try:
        body = RobotBody.from_dict(cfg.get("body", {}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    summary = {}
    for label, c in controllers.items():
        trace = swim(body, mesh, c, ctx.fluid, ctx.sim, cfg.get("distance_m", 0.30),
                     cfg.get("time_cap_s", 60.0))
        trace.write_csv(ctx.out / "traces" / f"swim_{label}.csv", cfg.get("csv_stride", 50))
        summary[label] = {**trace.summary(), "controller": controller_record(c)}
    (ctx.out / "metrics.json").write_text(_dumps(summary))
    return summary


RUNNERS: dict[str, Callable[..., dict]] = {
    "mesh": run_mesh,
    "simulate": run_simulate,
    "sweep": run_sweep,
    "optimize": run_optimize,
    "validate": run_validation,
    "swim": run_swim,
}


def run(command: str, config: dict, seed: int | None = None, output_dir=None,
        config_dir: Path | None = None) -> dict:
    ctx = prepare(command, config, seed, output_dir)
    runner = RUNNERS[command]
    if command in ("validate", "swim"):
        return runner(ctx, config_dir)
    return runner(ctx)
