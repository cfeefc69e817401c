"""Fixed-grid ray casting against analytic primitives.

The kernels are vectorized over rays. ``cast_grid`` returns a structure of
arrays (:class:`Hits`) in row-major grid order; indexing it yields
individual :class:`Hit` records.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scene import Pose, Quad, SceneFrame, Sphere, Triangle, range_rate, world_to_sensor

T_MIN = 1e-9


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be a unit vector")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class GridSpec:
    """Regular azimuth/elevation ray grid; rays sit at cell centers."""

    az_fov: tuple = (-np.pi / 3, np.pi / 3)
    el_fov: tuple = (-np.pi / 12, np.pi / 12)
    n_az: int = 256
    n_el: int = 64

    def __post_init__(self):
        if not (self.az_fov[0] < self.az_fov[1] and self.el_fov[0] < self.el_fov[1]):
            raise ValueError("field-of-view bounds must be ordered (min < max)")
        if self.n_az < 1 or self.n_el < 1:
            raise ValueError("ray counts must be >= 1")
        if self.el_fov[0] < -np.pi / 2 or self.el_fov[1] > np.pi / 2:
            raise ValueError("elevation must stay within [-pi/2, pi/2]")

    @property
    def az_step(self) -> float:
        return (self.az_fov[1] - self.az_fov[0]) / self.n_az

    @property
    def el_step(self) -> float:
        return (self.el_fov[1] - self.el_fov[0]) / self.n_el

    def az_centers(self) -> np.ndarray:
        return self.az_fov[0] + (np.arange(self.n_az) + 0.5) * self.az_step

    def el_centers(self) -> np.ndarray:
        return self.el_fov[0] + (np.arange(self.n_el) + 0.5) * self.el_step

    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-ray (azimuth, elevation), flattened row-major over (el, az)."""
        el, az = np.meshgrid(self.el_centers(), self.az_centers(), indexing="ij")
        return az.ravel(), el.ravel()

    def directions(self) -> np.ndarray:
        """Unit ray directions in the sensor frame, shape (n_el * n_az, 3)."""
        az, el = self.angles()
        return direction_from_angles(az, el)

    def solid_angles(self) -> np.ndarray:
        _, el = self.angles()
        return self.az_step * self.el_step * np.cos(el)


def direction_from_angles(az, el) -> np.ndarray:
    az = np.asarray(az, dtype=np.float64)
    el = np.asarray(el, dtype=np.float64)
    return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)


def angles_from_vectors(p) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth (positive toward +y) and elevation of sensor-frame vectors."""
    p = np.asarray(p, dtype=np.float64)
    az = np.arctan2(p[..., 1], p[..., 0])
    el = np.arctan2(p[..., 2], np.hypot(p[..., 0], p[..., 1]))
    return az, el


# --- vectorized kernels: return (t, normal); t = inf on miss -----------------

def sphere_kernel(origins, dirs, sphere: Sphere):
    oc = origins - sphere.center
    b = np.sum(dirs * oc, axis=-1)
    c = np.sum(oc * oc, axis=-1) - sphere.radius ** 2
    disc = b * b - c
    hit = disc >= 0.0
    root = np.sqrt(np.where(hit, disc, 0.0))
    t_near = -b - root
    t_far = -b + root
    t = np.where(t_near > T_MIN, t_near, np.where(t_far > T_MIN, t_far, np.inf))
    t = np.where(hit, t, np.inf)
    points = origins + dirs * np.where(np.isfinite(t), t, 0.0)[..., None]
    normals = (points - sphere.center) / sphere.radius
    return t, normals


def triangle_kernel(origins, dirs, tri: Triangle):
    # Moller-Trumbore
    e1 = tri.v1 - tri.v0
    e2 = tri.v2 - tri.v0
    pvec = np.cross(dirs, e2)
    det = pvec @ e1
    ok = np.abs(det) > 1e-12
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origins - tri.v0
    u = np.sum(tvec * pvec, axis=-1) * inv
    qvec = np.cross(tvec, e1)
    v = np.sum(dirs * qvec, axis=-1) * inv
    t = (qvec @ e2) * inv
    inside = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > T_MIN)
    t = np.where(inside, t, np.inf)
    n = np.cross(e1, e2)
    n = n / np.linalg.norm(n)
    return t, np.broadcast_to(n, dirs.shape)


def quad_kernel(origins, dirs, quad: Quad):
    n = np.cross(quad.edge_u, quad.edge_v)
    nn = n @ n
    denom = dirs @ n
    ok = np.abs(denom) > 1e-12 * np.sqrt(nn)
    t = np.where(ok, ((quad.corner - origins) @ n) / np.where(ok, denom, 1.0), np.inf)
    q = origins + dirs * np.where(np.isfinite(t), t, 0.0)[..., None] - quad.corner
    s = (np.cross(q, quad.edge_v) @ n) / nn
    r = (np.cross(quad.edge_u, q) @ n) / nn
    inside = ok & (t > T_MIN) & (s >= 0.0) & (s <= 1.0) & (r >= 0.0) & (r <= 1.0)
    t = np.where(inside, t, np.inf)
    return t, np.broadcast_to(n / np.sqrt(nn), dirs.shape)


_KERNELS = {Sphere: sphere_kernel, Triangle: triangle_kernel, Quad: quad_kernel}


def intersect_distances(origins, dirs, primitive):
    return _KERNELS[type(primitive)](origins, dirs, primitive)


def _orient(normals, dirs):
    # flip toward the ray origin; returns (normal, cos_incidence)
    cos_raw = -np.sum(dirs * normals, axis=-1)
    sign = np.where(cos_raw < 0.0, -1.0, 1.0)
    return normals * sign[..., None], np.clip(np.abs(cos_raw), 0.0, 1.0)


# --- hit records ------------------------------------------------------------

@dataclass(frozen=True)
class Hit:
    distance: float
    point: np.ndarray
    normal: np.ndarray
    incidence: float
    actor_index: int = -1
    class_id: int = 0
    reflectivity: float = 0.0
    range_rate: float = 0.0
    solid_angle: float = 0.0
    ray_index: int = -1
    local_point: Optional[np.ndarray] = None
    rcs_override: Optional[float] = None


def _single(ray: Ray, primitive) -> Optional[Hit]:
    o = ray.origin[None, :]
    d = ray.direction[None, :]
    t, normals = intersect_distances(o, d, primitive)
    if not np.isfinite(t[0]):
        return None
    normal, cos_inc = _orient(normals[:1], d)
    point = ray.origin + t[0] * ray.direction
    return Hit(float(t[0]), point, normal[0], float(np.arccos(cos_inc[0])))


def intersect_sphere(ray: Ray, sphere: Sphere) -> Optional[Hit]:
    return _single(ray, sphere)


def intersect_triangle(ray: Ray, tri: Triangle) -> Optional[Hit]:
    return _single(ray, tri)


def intersect_quad(ray: Ray, quad: Quad) -> Optional[Hit]:
    return _single(ray, quad)


@dataclass
class Hits:
    """Hit records for one grid cast, one row per ray that hit something."""

    ray_index: np.ndarray
    distance: np.ndarray
    point: np.ndarray
    local_point: np.ndarray
    direction: np.ndarray
    normal: np.ndarray
    incidence: np.ndarray
    actor_index: np.ndarray
    class_id: np.ndarray
    reflectivity: np.ndarray
    range_rate: np.ndarray
    solid_angle: np.ndarray
    rcs_override: np.ndarray  # nan where the actor has none

    def __len__(self) -> int:
        return len(self.distance)

    def __getitem__(self, i) -> Hit:
        rcs = self.rcs_override[i]
        return Hit(
            distance=float(self.distance[i]),
            point=self.point[i],
            normal=self.normal[i],
            incidence=float(self.incidence[i]),
            actor_index=int(self.actor_index[i]),
            class_id=int(self.class_id[i]),
            reflectivity=float(self.reflectivity[i]),
            range_rate=float(self.range_rate[i]),
            solid_angle=float(self.solid_angle[i]),
            ray_index=int(self.ray_index[i]),
            local_point=self.local_point[i],
            rcs_override=None if np.isnan(rcs) else float(rcs),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def select(self, mask) -> "Hits":
        return Hits(**{k: v[mask] for k, v in self.__dict__.items()})

    @classmethod
    def empty(cls) -> "Hits":
        z = np.zeros(0)
        z3 = np.zeros((0, 3))
        zi = np.zeros(0, dtype=np.int64)
        return cls(zi, z, z3, z3, z3, z3, z, zi, zi, z, z, z, z)


def cast_grid(frame: SceneFrame, sensor_pose: Pose, sensor_velocity, grid: GridSpec) -> Hits:
    """Nearest hit per grid cell over all actors of ``frame``."""
    dirs_local = grid.directions()
    dirs = dirs_local @ sensor_pose.rotation.T
    origin = sensor_pose.position
    n_rays = len(dirs)
    if not frame.actors:
        return Hits.empty()

    best_t = np.full(n_rays, np.inf)
    best_actor = np.full(n_rays, -1, dtype=np.int64)
    best_normal = np.zeros((n_rays, 3))
    origins = np.broadcast_to(origin, dirs.shape)
    for idx, actor in enumerate(frame.actors):
        t, normals = intersect_distances(origins, dirs, actor.primitive)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_actor = np.where(closer, idx, best_actor)
        best_normal = np.where(closer[:, None], normals, best_normal)

    rays = np.flatnonzero(np.isfinite(best_t))
    if rays.size == 0:
        return Hits.empty()
    t = best_t[rays]
    d = dirs[rays]
    actor_idx = best_actor[rays]
    normal, cos_inc = _orient(best_normal[rays], d)
    points = origin + d * t[:, None]

    actors = frame.actors
    vel = np.array([a.velocity for a in actors])[actor_idx]
    cls = np.array([a.material.class_id for a in actors], dtype=np.int64)[actor_idx]
    rho = np.array([a.material.reflectivity for a in actors])[actor_idx]
    rcs = np.array([np.nan if a.rcs_override is None else a.rcs_override for a in actors])[actor_idx]
    rr = range_rate(points, vel, origin, np.asarray(sensor_velocity, dtype=np.float64))

    return Hits(
        ray_index=rays,
        distance=t,
        point=points,
        local_point=world_to_sensor(sensor_pose, points),
        direction=dirs_local[rays],
        normal=normal,
        incidence=np.arccos(cos_inc),
        actor_index=actor_idx,
        class_id=cls,
        reflectivity=rho,
        range_rate=rr,
        solid_angle=grid.solid_angles()[rays],
        rcs_override=rcs,
    )
