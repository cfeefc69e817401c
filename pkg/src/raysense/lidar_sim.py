"""Coherent (Doppler-measuring) lidar: scan, intensity, dropout, range noise, 2D maps.

Image convention: u grows to the right (sensor -y), v grows downward
(sensor -z); pixel (i, j) covers [i, i+1) x [j, j+1) so its center sits at
(i + 0.5, j + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .raycast import GridSpec, cast_grid
from .scene import Pose, SceneFrame


def intrinsics_from_fov(fov_h: float, fov_v: float, width: int, height: int) -> np.ndarray:
    for fov in (fov_h, fov_v):
        if not 0.0 < fov < np.pi:
            raise ValueError(f"field of view must lie in (0, pi), got {fov}")
    if width < 1 or height < 1:
        raise ValueError("image size must be positive")
    fx = (width / 2.0) / np.tan(fov_h / 2.0)
    fy = (height / 2.0) / np.tan(fov_v / 2.0)
    return np.array([[fx, 0.0, width / 2.0], [0.0, fy, height / 2.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class LidarConfig:
    grid: GridSpec = field(default_factory=lambda: GridSpec((-np.pi / 4, np.pi / 4), (-np.pi / 12, np.pi / 12), 256, 64))
    max_range: float = 120.0
    intensity_ref: float = 0.1
    attenuation_scale: float = 50.0
    noise_var_coeff: float = 4e-4
    dropout_floor: float = 0.0
    width: int = 256
    height: int = 64
    intrinsics: np.ndarray = None

    def __post_init__(self):
        if not self.max_range > 0:
            raise ValueError("max_range must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")
        if not 0.0 <= self.dropout_floor <= 1.0:
            raise ValueError("dropout_floor must lie in [0, 1]")
        if self.intensity_ref <= 0 or self.attenuation_scale <= 0 or self.noise_var_coeff < 0:
            raise ValueError("intensity_ref and attenuation_scale must be > 0, noise_var_coeff >= 0")
        K = self.intrinsics
        if K is None:
            g = self.grid
            K = intrinsics_from_fov(g.az_fov[1] - g.az_fov[0], g.el_fov[1] - g.el_fov[0],
                                    self.width, self.height)
        K = np.asarray(K, dtype=np.float64)
        if K.shape != (3, 3) or not (K[0, 0] > 0 and K[1, 1] > 0) or K[0, 1] != 0:
            raise ValueError("intrinsics must be a zero-skew 3x3 matrix with fx, fy > 0")
        object.__setattr__(self, "intrinsics", K)


@dataclass
class LidarPoints:
    """Point cloud in array form, sensor frame."""

    position: np.ndarray
    depth: np.ndarray
    range_rate: np.ndarray
    intensity: np.ndarray
    class_id: np.ndarray
    ray_index: np.ndarray

    def __len__(self) -> int:
        return len(self.depth)

    def select(self, mask) -> "LidarPoints":
        return LidarPoints(**{k: v[mask] for k, v in self.__dict__.items()})

    @classmethod
    def empty(cls) -> "LidarPoints":
        return cls(np.zeros((0, 3)), np.zeros(0), np.zeros(0), np.zeros(0),
                   np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


@dataclass
class LidarMaps:
    depth: np.ndarray
    doppler: np.ndarray
    semantic: np.ndarray
    intensity: np.ndarray
    # index into the point cloud that owns each pixel, -1 = empty
    owner: np.ndarray


@dataclass
class LidarFrame:
    points: LidarPoints
    maps: LidarMaps


def intensity(hit, cfg: LidarConfig):
    """Lambertian return with a bounded non-linear range falloff.

    ``hit`` may be a single Hit or a Hits batch.
    """
    d = np.asarray(hit.distance)
    return np.asarray(hit.reflectivity) * np.cos(np.asarray(hit.incidence)) / (1.0 + (d / cfg.attenuation_scale) ** 2)


def dropout_keep_probability(i, cfg: LidarConfig):
    return np.clip(np.asarray(i, dtype=np.float64) / cfg.intensity_ref, cfg.dropout_floor, 1.0)


def apply_dropout(points: LidarPoints, cfg: LidarConfig, seed: int) -> LidarPoints:
    """Drop returns with probability 1 - p_keep; draws keyed on (seed, ray index)."""
    if len(points) == 0:
        return points
    u = rng.keyed_uniform(seed, rng.STREAM_LIDAR_DROPOUT, points.ray_index.astype(np.uint64))
    return points.select(u < dropout_keep_probability(points.intensity, cfg))


def apply_range_noise(points: LidarPoints, cfg: LidarConfig, seed: int) -> LidarPoints:
    """Add N(0, noise_var_coeff * d) to each range and slide the point along its ray."""
    if len(points) == 0 or cfg.noise_var_coeff == 0:
        return points
    z = rng.keyed_normal(seed, rng.STREAM_LIDAR_RANGE, points.ray_index.astype(np.uint64))
    depth = points.depth + z * np.sqrt(cfg.noise_var_coeff * points.depth)
    depth = np.clip(depth, np.finfo(np.float64).tiny, cfg.max_range)
    position = points.position * (depth / points.depth)[:, None]
    return replace(points, depth=depth, position=position)


def project(points_xyz, K) -> tuple[np.ndarray, np.ndarray]:
    """Continuous pixel coordinates (u, v) of sensor-frame points."""
    p = np.asarray(points_xyz, dtype=np.float64)
    x = p[..., 0]
    u = K[0, 2] - K[0, 0] * p[..., 1] / x
    v = K[1, 2] - K[1, 1] * p[..., 2] / x
    return u, v


def back_project(u, v, depth, K) -> np.ndarray:
    """Sensor-frame point at Euclidean range ``depth`` along the ray through (u, v)."""
    ray = np.stack([np.ones_like(np.asarray(u, dtype=np.float64)),
                    -(np.asarray(u) - K[0, 2]) / K[0, 0],
                    -(np.asarray(v) - K[1, 2]) / K[1, 1]], axis=-1)
    ray /= np.linalg.norm(ray, axis=-1, keepdims=True)
    return ray * np.asarray(depth)[..., None]


def project_to_maps(points: LidarPoints, K, width: int, height: int) -> LidarMaps:
    """Z-buffered pinhole projection; nearest depth owns each pixel."""
    depth_map = np.zeros((height, width))
    doppler = np.zeros((height, width))
    semantic = np.zeros((height, width), dtype=np.int64)
    inten = np.zeros((height, width))
    owner = np.full((height, width), -1, dtype=np.int64)
    if len(points) == 0:
        return LidarMaps(depth_map, doppler, semantic, inten, owner)
    fwd = points.position[:, 0] > 0
    idx = np.flatnonzero(fwd)
    u, v = project(points.position[idx], K)
    col = np.floor(u).astype(np.int64)
    row = np.floor(v).astype(np.int64)
    ok = (col >= 0) & (col < width) & (row >= 0) & (row < height)
    idx, col, row = idx[ok], col[ok], row[ok]
    pix = row * width + col
    # per pixel: nearest depth first, ties broken by ray order
    order = np.lexsort((idx, points.depth[idx], pix))
    _, first = np.unique(pix[order], return_index=True)
    win = order[first]
    owner[row[win], col[win]] = idx[win]
    filled = owner >= 0
    src = owner[filled]
    depth_map[filled] = points.depth[src]
    doppler[filled] = points.range_rate[src]
    semantic[filled] = points.class_id[src]
    inten[filled] = points.intensity[src]
    return LidarMaps(depth_map, doppler, semantic, inten, owner)


def scan(frame: SceneFrame, sensor_pose: Pose, sensor_velocity, cfg: LidarConfig, seed: int) -> LidarFrame:
    """Cast the grid, then intensity -> dropout -> range noise -> maps."""
    hits = cast_grid(frame, sensor_pose, sensor_velocity, cfg.grid)
    hits = hits.select(hits.distance <= cfg.max_range)
    if len(hits) == 0:
        points = LidarPoints.empty()
    else:
        points = LidarPoints(
            position=hits.local_point,
            depth=hits.distance,
            range_rate=hits.range_rate,
            intensity=intensity(hits, cfg),
            class_id=hits.class_id,
            ray_index=hits.ray_index,
        )
        points = apply_dropout(points, cfg, seed)
        points = apply_range_noise(points, cfg, seed)
    maps = project_to_maps(points, cfg.intrinsics, cfg.width, cfg.height)
    return LidarFrame(points, maps)
