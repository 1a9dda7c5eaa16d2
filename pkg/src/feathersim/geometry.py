"""Parametric feather morphologies and their plate-element meshes.

A feather is a thin rectangular sheet of length ``l`` (span, along +x from the
root) and unfolded width ``w`` (chord, along y). Three variants exist:

* ``PLAIN``: a flexible strip, discretized into a chain of plates joined by
  two-way spring-damper hinges.
* ``CHORDWISE_FLAPS``: a central spine of width ``w_spine`` with flap panels
  hinged along both spine edges, one panel per spanwise station and side.
* ``SPANWISE_FLAPS``: a chain whose hinge nearest to ``l_root`` is one-way.

One-way hinges have a hard stop at the coplanar configuration. The free
direction folds the flap towards -z, which is the side the flow pushes it to
on the upstroke.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Raised for invalid feather geometry or meshing requests."""


class FeatherKind(str, enum.Enum):
    PLAIN = "plain"
    CHORDWISE_FLAPS = "chordwise"
    SPANWISE_FLAPS = "spanwise"


class JointKind(enum.IntEnum):
    ROOT = 0
    TWO_WAY = 1
    ONE_WAY = 2


@dataclass(frozen=True)
class FeatherGeometry:
    kind: FeatherKind
    length_m: float
    width_m: float
    spine_width_m: float = 0.01
    root_length_m: float | None = None
    thickness_m: float = 0.0004
    material_density_kg_m3: float = 905.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatherKind(self.kind))
        self.validate()

    def validate(self) -> None:
        for name in ("length_m", "width_m", "thickness_m", "material_density_kg_m3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise GeometryError(f"{name} must be positive and finite, got {value!r}")
        if self.kind is FeatherKind.CHORDWISE_FLAPS:
            if not 0 < self.spine_width_m < self.width_m:
                raise GeometryError(
                    "chordwise flaps need 0 < spine_width_m < width_m, got "
                    f"spine_width_m={self.spine_width_m}, width_m={self.width_m}"
                )
        if self.kind is FeatherKind.SPANWISE_FLAPS:
            if self.root_length_m is None or not 0 < self.root_length_m < self.length_m:
                raise GeometryError(
                    "spanwise flaps need 0 < root_length_m < length_m, got "
                    f"root_length_m={self.root_length_m}, length_m={self.length_m}"
                )

    @property
    def area_m2(self) -> float:
        return self.length_m * self.width_m

    @property
    def volume_m3(self) -> float:
        return self.area_m2 * self.thickness_m

    @property
    def mass_kg(self) -> float:
        return self.material_density_kg_m3 * self.volume_m3

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind.value,
            "length_m": self.length_m,
            "width_m": self.width_m,
            "thickness_m": self.thickness_m,
            "material_density_kg_m3": self.material_density_kg_m3,
        }
        if self.kind is FeatherKind.CHORDWISE_FLAPS:
            d["spine_width_m"] = self.spine_width_m
        if self.kind is FeatherKind.SPANWISE_FLAPS:
            d["root_length_m"] = self.root_length_m
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatherGeometry":
        allowed = {
            "kind", "length_m", "width_m", "spine_width_m", "root_length_m",
            "thickness_m", "material_density_kg_m3",
        }
        unknown = set(d) - allowed
        if unknown:
            raise GeometryError(f"unknown geometry keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class RatioDescriptor:
    width_ratio: float
    length_ratio: float


def ratio_of(geometry: FeatherGeometry) -> RatioDescriptor:
    """Width ratio ``w / w_spine`` and length ratio ``l / l_root``; 1 when not applicable."""
    geometry.validate()
    wr = lr = 1.0
    if geometry.kind is FeatherKind.CHORDWISE_FLAPS:
        wr = geometry.width_m / geometry.spine_width_m
    elif geometry.kind is FeatherKind.SPANWISE_FLAPS:
        lr = geometry.length_m / geometry.root_length_m
    return RatioDescriptor(width_ratio=wr, length_ratio=lr)


@dataclass(frozen=True)
class MaterialModel:
    """Hinge constitutive defaults for a thin polypropylene sheet.

    Two-way hinges use the bending stiffness ``E I / L`` of the strip they
    replace. One-way hinges are nearly free in the folding direction
    (``free_stiffness_ratio`` of the strip value) and stiff past the stop
    (``stop_stiffness_ratio`` of it). Damping is specified as a fraction of
    critical damping of the outboard inertia on each hinge.
    """

    youngs_modulus_pa: float = 1.5e9
    damping_ratio: float = 0.5
    free_stiffness_ratio: float = 0.01
    free_damping_ratio: float = 0.05
    stop_stiffness_ratio: float = 1.0e3
    stop_damping_ratio: float = 1.0
    fold_limit_rad: float = math.radians(120.0)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialModel":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise GeometryError(f"unknown material keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class PlateElement:
    """Rigid rectangular plate.

    The body frame has its origin on the inboard hinge line. ``size`` is
    (extent along body x, extent along body y); the centroid sits at
    ``centroid`` and the plate normal is body +z.
    """

    name: str
    size: tuple[float, float]
    centroid: tuple[float, float, float]
    mass: float
    area: float
    volume: float
    inertia: tuple[float, float, float]  # principal moments about the centroid


@dataclass(frozen=True)
class Joint:
    """Revolute joint from ``parent`` (-1 is the actuated mount) into ``child``.

    ``origin`` is the hinge position in the parent body frame; ``axis`` is a
    unit vector shared by the parent and child frames.
    """

    kind: JointKind
    parent: int
    child: int
    origin: tuple[float, float, float]
    axis: tuple[float, float, float]
    stiffness: float
    damping: float
    lower_limit_rad: float
    upper_limit_rad: float
    stop_stiffness: float = 0.0
    stop_damping: float = 0.0


@dataclass(frozen=True)
class FeatherMesh:
    geometry: FeatherGeometry
    spanwise_elements: int
    elements: tuple[PlateElement, ...]
    joints: tuple[Joint, ...]
    root_joint_index: int = 0
    hinge_position_m: float | None = None

    @property
    def one_way_joints(self) -> tuple[int, ...]:
        return tuple(i for i, j in enumerate(self.joints) if j.kind is JointKind.ONE_WAY)

    @property
    def total_area(self) -> float:
        return math.fsum(e.area for e in self.elements)

    @property
    def total_mass(self) -> float:
        return math.fsum(e.mass for e in self.elements)

    @property
    def total_volume(self) -> float:
        return math.fsum(e.volume for e in self.elements)

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry.to_dict(),
            "spanwise_elements": self.spanwise_elements,
            "root_joint_index": self.root_joint_index,
            "hinge_position_m": self.hinge_position_m,
            "elements": [
                {
                    "name": e.name,
                    "size": list(e.size),
                    "centroid": list(e.centroid),
                    "mass": e.mass,
                    "area": e.area,
                    "volume": e.volume,
                    "inertia": list(e.inertia),
                }
                for e in self.elements
            ],
            "joints": [
                {
                    "kind": j.kind.name.lower(),
                    "parent": j.parent,
                    "child": j.child,
                    "origin": list(j.origin),
                    "axis": list(j.axis),
                    "stiffness": j.stiffness,
                    "damping": j.damping,
                    "lower_limit_rad": _finite_or_none(j.lower_limit_rad),
                    "upper_limit_rad": _finite_or_none(j.upper_limit_rad),
                    "stop_stiffness": j.stop_stiffness,
                    "stop_damping": j.stop_damping,
                }
                for j in self.joints
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def arrays(self) -> "MeshArrays":
        return MeshArrays.from_mesh(self)


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _plate(name: str, a: float, b: float, centroid, geometry: FeatherGeometry) -> PlateElement:
    area = a * b
    volume = area * geometry.thickness_m
    mass = geometry.material_density_kg_m3 * volume
    t = geometry.thickness_m
    inertia = (
        mass * (b * b + t * t) / 12.0,
        mass * (a * a + t * t) / 12.0,
        mass * (a * a + b * b) / 12.0,
    )
    return PlateElement(name, (a, b), tuple(float(c) for c in centroid), mass, area, volume, inertia)


def _strip_stiffness(modulus: float, strip_width: float, thickness: float, span: float) -> float:
    return modulus * strip_width * thickness**3 / 12.0 / span


def build_mesh(
    geometry: FeatherGeometry,
    spanwise_elements: int = 8,
    material: MaterialModel | None = None,
) -> FeatherMesh:
    """Discretize ``geometry`` into rigid plates joined by revolute hinges.

    Body 0 is the root plate, attached to the mount by the actuated joint 0.
    Spine plates ``0..n-1`` form the spanwise chain; for chordwise flaps the
    panels follow, alternating +y and -y per station.
    """
    geometry.validate()
    material = material or MaterialModel()
    n = int(spanwise_elements)
    if n < 2:
        raise GeometryError(f"spanwise_elements must be >= 2, got {spanwise_elements}")

    seg = geometry.length_m / n
    t = geometry.thickness_m
    E = material.youngs_modulus_pa
    kind = geometry.kind

    chain_width = geometry.spine_width_m if kind is FeatherKind.CHORDWISE_FLAPS else geometry.width_m
    elements: list[PlateElement] = []
    for i in range(n):
        elements.append(_plate(f"spine{i}", seg, chain_width, (seg / 2, 0.0, 0.0), geometry))

    hinge_station = None
    if kind is FeatherKind.SPANWISE_FLAPS:
        hinge_station = int(round(geometry.root_length_m / seg))
        achievable = [round(k * seg, 12) for k in range(1, n)]
        if not 1 <= hinge_station <= n - 1 or abs(hinge_station * seg - geometry.root_length_m) > seg / 2:
            raise GeometryError(
                f"cannot place the l_root hinge at {geometry.root_length_m} m with "
                f"{n} elements; achievable positions: {achievable}"
            )

    # Flexible chain: the strip replaced by a hinge spans the whole unfolded width,
    # since chordwise flap strips lying flat bend together with the spine.
    k_strip = _strip_stiffness(E, geometry.width_m, t, seg)
    joints: list[Joint] = []
    joints.append(
        Joint(JointKind.ROOT, -1, 0, (0.0, 0.0, 0.0), (0.0, -1.0, 0.0), 0.0, 0.0, -math.inf, math.inf)
    )
    for i in range(1, n):
        if hinge_station is not None and i == hinge_station:
            joints.append(_one_way(i - 1, i, (seg, 0.0, 0.0), (0.0, 1.0, 0.0), k_strip, material))
        else:
            joints.append(
                Joint(JointKind.TWO_WAY, i - 1, i, (seg, 0.0, 0.0), (0.0, -1.0, 0.0),
                      k_strip, 0.0, -math.inf, math.inf)
            )

    if kind is FeatherKind.CHORDWISE_FLAPS:
        half = geometry.spine_width_m / 2
        flap = (geometry.width_m - geometry.spine_width_m) / 2
        k_flap = _strip_stiffness(E, seg, t, flap)
        for i in range(n):
            for side, sign in (("L", 1.0), ("R", -1.0)):
                idx = len(elements)
                elements.append(
                    _plate(f"flap{side}{i}", seg, flap, (seg / 2, sign * flap / 2, 0.0), geometry)
                )
                # axis chosen so a positive angle folds the panel towards -z
                joints.append(_one_way(i, idx, (0.0, sign * half, 0.0), (-sign, 0.0, 0.0), k_flap, material))

    joints = _with_damping(elements, joints, material)
    hinge_pos = hinge_station * seg if hinge_station is not None else None
    return FeatherMesh(geometry, n, tuple(elements), tuple(joints), 0, hinge_pos)


def _one_way(parent, child, origin, axis, k_strip, material: MaterialModel) -> Joint:
    return Joint(
        JointKind.ONE_WAY, parent, child, origin, axis,
        stiffness=material.free_stiffness_ratio * k_strip,
        damping=0.0,
        lower_limit_rad=0.0,
        upper_limit_rad=material.fold_limit_rad,
        stop_stiffness=material.stop_stiffness_ratio * k_strip,
        stop_damping=0.0,
    )


def _with_damping(elements, joints, material: MaterialModel) -> list[Joint]:
    """Fill joint damping from the rest-pose outboard inertia about each hinge."""
    arr = MeshArrays.from_parts(elements, joints)
    children: dict[int, list[int]] = {}
    for j in joints:
        children.setdefault(j.parent, []).append(j.child)

    def subtree(b):
        out = [b]
        for c in children.get(b, []):
            out.extend(subtree(c))
        return out

    pos = arr.rest_positions()
    out = []
    for j in joints:
        if j.kind is JointKind.ROOT:
            out.append(j)
            continue
        hinge = pos[j.parent] + np.asarray(j.origin)
        axis = np.asarray(j.axis)
        inertia = 0.0
        for b in subtree(j.child):
            e = elements[b]
            r = pos[b] + np.asarray(e.centroid) - hinge
            r_perp = r - axis * (r @ axis)
            inertia += e.mass * (r_perp @ r_perp) + float(np.abs(axis) @ np.asarray(e.inertia))
        crit = 2.0 * math.sqrt(j.stiffness * inertia) if j.stiffness > 0 else 0.0
        if j.kind is JointKind.TWO_WAY:
            damping = material.damping_ratio * crit
            out.append(_replace(j, damping=damping))
        else:
            stop_crit = 2.0 * math.sqrt(j.stop_stiffness * inertia)
            out.append(
                _replace(
                    j,
                    damping=material.free_damping_ratio * crit,
                    stop_damping=material.stop_damping_ratio * stop_crit,
                )
            )
    return out


def _replace(joint: Joint, **kw) -> Joint:
    d = dict(joint.__dict__)
    d.update(kw)
    return Joint(**d)


@dataclass
class MeshArrays:
    """Flat numpy view of a mesh for the dynamics kernel (one joint per body)."""

    parent: np.ndarray
    origin: np.ndarray
    axis: np.ndarray
    com: np.ndarray
    mass: np.ndarray
    inertia: np.ndarray
    area: np.ndarray
    volume: np.ndarray
    joint_kind: np.ndarray
    stiffness: np.ndarray
    damping: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    stop_stiffness: np.ndarray
    stop_damping: np.ndarray
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_mesh(cls, mesh: FeatherMesh) -> "MeshArrays":
        return cls.from_parts(mesh.elements, mesh.joints)

    @classmethod
    def from_parts(cls, elements, joints) -> "MeshArrays":
        nb = len(elements)
        if len(joints) != nb:
            raise GeometryError("each body needs exactly one inboard joint")
        by_child = sorted(joints, key=lambda j: j.child)
        if [j.child for j in by_child] != list(range(nb)):
            raise GeometryError("joint children must cover every body once")
        for j in by_child:
            if j.parent >= j.child:
                raise GeometryError("bodies must be ordered parent-before-child")
        f8 = np.float64
        return cls(
            parent=np.array([j.parent for j in by_child], dtype=np.int64),
            origin=np.array([j.origin for j in by_child], dtype=f8),
            axis=np.array([j.axis for j in by_child], dtype=f8),
            com=np.array([e.centroid for e in elements], dtype=f8),
            mass=np.array([e.mass for e in elements], dtype=f8),
            inertia=np.array([e.inertia for e in elements], dtype=f8),
            area=np.array([e.area for e in elements], dtype=f8),
            volume=np.array([e.volume for e in elements], dtype=f8),
            joint_kind=np.array([int(j.kind) for j in by_child], dtype=np.int64),
            stiffness=np.array([j.stiffness for j in by_child], dtype=f8),
            damping=np.array([j.damping for j in by_child], dtype=f8),
            lower=np.array([j.lower_limit_rad for j in by_child], dtype=f8),
            upper=np.array([j.upper_limit_rad for j in by_child], dtype=f8),
            stop_stiffness=np.array([j.stop_stiffness for j in by_child], dtype=f8),
            stop_damping=np.array([j.stop_damping for j in by_child], dtype=f8),
        )

    def rest_positions(self) -> np.ndarray:
        """Body frame origins in the mount frame with every joint at zero."""
        pos = np.zeros((len(self.parent), 3))
        for b, p in enumerate(self.parent):
            pos[b] = self.origin[b] + (pos[p] if p >= 0 else 0.0)
        return pos
