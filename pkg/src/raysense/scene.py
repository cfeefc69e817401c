"""Scene description: analytic primitives, actors, ego kinematics and the sensor rig.

World frame is right-handed with x forward, y left, z up. Sensor frames use
the same axes relative to the sensor: x is boresight, y left, z up.
Positions are in meters and velocities in m/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional, Union

import numpy as np


class SceneError(ValueError):
    """Invalid scene content (bad primitive, pose or actor)."""


def vec3(values) -> np.ndarray:
    """Return a read-only float64 3-vector, rejecting non-finite input."""
    v = np.array(values, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise SceneError(f"expected 3 components, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise SceneError(f"non-finite vector {v.tolist()}")
    v.flags.writeable = False
    return v


def yaw_rotation(yaw_rad: float) -> np.ndarray:
    c, s = np.cos(yaw_rad), np.sin(yaw_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class _ArrayEq:
    # dataclass equality that tolerates numpy fields
    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Pose(_ArrayEq):
    position: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        R = np.array(self.rotation, dtype=np.float64)
        if R.shape != (3, 3) or not np.all(np.isfinite(R)):
            raise SceneError("rotation must be a finite 3x3 matrix")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9, rtol=0.0):
            raise SceneError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise SceneError("rotation determinant is not +1")
        R.flags.writeable = False
        object.__setattr__(self, "rotation", R)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), np.eye(3))

    @classmethod
    def from_yaw(cls, position, yaw_rad: float) -> "Pose":
        return cls(position, yaw_rotation(yaw_rad))

    def compose(self, child: "Pose") -> "Pose":
        """World pose of ``child`` given relative to this pose."""
        return Pose(self.position + self.rotation @ child.position, self.rotation @ child.rotation)


def world_to_sensor(pose: Pose, p) -> np.ndarray:
    """Express world points (3,) or (n, 3) in the sensor frame: R^T (p - t)."""
    p = np.asarray(p, dtype=np.float64)
    return (p - pose.position) @ pose.rotation


def sensor_to_world(pose: Pose, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return p @ pose.rotation.T + pose.position


def range_rate(p_t, v_t, p_s, v_s) -> np.ndarray:
    """Time derivative of the target-sensor distance (positive = receding).

    Broadcasts over leading dimensions.
    """
    los = np.asarray(p_t, dtype=np.float64) - np.asarray(p_s, dtype=np.float64)
    dist = np.linalg.norm(los, axis=-1)
    if np.any(dist == 0.0):
        raise ValueError("range_rate undefined for coincident target and sensor")
    dv = np.asarray(v_t, dtype=np.float64) - np.asarray(v_s, dtype=np.float64)
    return np.sum(dv * los, axis=-1) / dist


@dataclass(frozen=True)
class Material:
    class_id: int = 0
    reflectivity: float = 0.5

    def __post_init__(self):
        if int(self.class_id) != self.class_id or self.class_id < 0:
            raise SceneError(f"class_id must be a non-negative integer, got {self.class_id}")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise SceneError(f"reflectivity must lie in [0, 1], got {self.reflectivity}")


@dataclass(frozen=True, eq=False)
class Sphere(_ArrayEq):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", vec3(self.center))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise SceneError(f"sphere radius must be > 0, got {self.radius}")

    def translated(self, offset) -> "Sphere":
        return Sphere(self.center + offset, self.radius)


@dataclass(frozen=True, eq=False)
class Triangle(_ArrayEq):
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        for name in ("v0", "v1", "v2"):
            object.__setattr__(self, name, vec3(getattr(self, name)))
        if np.linalg.norm(np.cross(self.v1 - self.v0, self.v2 - self.v0)) <= 0.0:
            raise SceneError("degenerate triangle (zero area)")

    def translated(self, offset) -> "Triangle":
        return Triangle(self.v0 + offset, self.v1 + offset, self.v2 + offset)


@dataclass(frozen=True, eq=False)
class Quad(_ArrayEq):
    """Parallelogram ``corner + s*edge_u + t*edge_v`` for s, t in [0, 1]."""

    corner: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray

    def __post_init__(self):
        for name in ("corner", "edge_u", "edge_v"):
            object.__setattr__(self, name, vec3(getattr(self, name)))
        if np.linalg.norm(np.cross(self.edge_u, self.edge_v)) <= 0.0:
            raise SceneError("degenerate quad (parallel edges)")

    def translated(self, offset) -> "Quad":
        return Quad(self.corner + offset, self.edge_u, self.edge_v)


Primitive = Union[Sphere, Triangle, Quad]


@dataclass(frozen=True, eq=False)
class Actor(_ArrayEq):
    primitive: Primitive
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    material: Material = field(default_factory=Material)
    rcs_override: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "velocity", vec3(self.velocity))
        if self.rcs_override is not None and not (np.isfinite(self.rcs_override) and self.rcs_override >= 0):
            raise SceneError(f"rcs_m2 must be finite and >= 0, got {self.rcs_override}")


@dataclass(frozen=True, eq=False)
class SceneFrame(_ArrayEq):
    timestamp: float
    actors: tuple = ()
    ego_pose: Pose = field(default_factory=Pose.identity)
    ego_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "actors", tuple(self.actors))
        object.__setattr__(self, "ego_velocity", vec3(self.ego_velocity))

    def advanced(self, dt: float) -> "SceneFrame":
        """Propagate every actor and the ego by rigid translation over ``dt``."""
        actors = tuple(
            replace(a, primitive=a.primitive.translated(a.velocity * dt)) for a in self.actors
        )
        ego = Pose(self.ego_pose.position + self.ego_velocity * dt, self.ego_pose.rotation)
        return SceneFrame(self.timestamp + dt, actors, ego, self.ego_velocity)


@dataclass(frozen=True, eq=False)
class Mount(_ArrayEq):
    pose: Pose
    suite: int


@dataclass(frozen=True)
class RigConfig:
    mounts: tuple

    def __post_init__(self):
        object.__setattr__(self, "mounts", tuple(self.mounts))


DEFAULT_SUITE_SPACING = 0.4


def default_rig(front_x: float = 2.0, back_x: float = -2.0, height: float = 0.5,
                spacing: float = DEFAULT_SUITE_SPACING) -> RigConfig:
    """Six suites: three facing forward at the front bumper, three facing back."""
    mounts = []
    offsets = (spacing, 0.0, -spacing)
    for i, y in enumerate(offsets):
        mounts.append(Mount(Pose.from_yaw((front_x, y, height), 0.0), suite=i))
    for i, y in enumerate(offsets):
        mounts.append(Mount(Pose.from_yaw((back_x, y, height), np.pi), suite=3 + i))
    return RigConfig(tuple(mounts))


def rig_mount_poses(rig: RigConfig, ego_pose: Pose) -> list[Pose]:
    return [ego_pose.compose(m.pose) for m in rig.mounts]


def load_scenario(path):
    """Load a scenario file (frames, rig and sensor blocks); see :mod:`raysense.scenario`."""
    from .scenario import load_scenario as _load

    return _load(path)
