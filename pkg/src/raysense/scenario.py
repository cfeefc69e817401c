"""Scenario files: JSON documents describing frames, the rig and sensor configs.

Top-level keys (unknown keys anywhere are rejected)::

    meta    {frame_rate_hz, seed}
    radar   {f0_hz, bandwidth_hz, chirp_time_s, inter_chirp_time_s, n_chirps,
             n_samples, ptx_w, noise_sigma, tx_positions_m, rx_positions_m,
             gain_exponent, grid}                                  (optional)
    lidar   {grid, max_range_m, intensity_ref, attenuation_scale_m,
             noise_var_coeff_m, dropout_floor, width_px, height_px,
             intrinsics{fx, fy, cx, cy}}                           (optional)
    rig     {mounts: [{position, yaw_deg | rotation, suite}]}      (optional)
    frames  [{t, ego{position, yaw_deg | rotation, velocity},
              actors: [{shape{type, params}, velocity, class_id,
                        reflectivity, rcs_m2}]}]

``grid`` is {az_fov_deg: [min, max], el_fov_deg: [min, max], n_az, n_el}.
Shape params: sphere {center, radius}; triangle {v0, v1, v2};
quad {corner, edge_u, edge_v}. See README for the full field table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .lidar_sim import LidarConfig
from .radar_model import ArrayConfig, WaveformConfig, default_array
from .raycast import GridSpec
from .scene import (
    Actor,
    Material,
    Mount,
    Pose,
    Quad,
    RigConfig,
    SceneError,
    SceneFrame,
    Sphere,
    Triangle,
    default_rig,
    yaw_rotation,
)


class ScenarioError(ValueError):
    """Parse or validation failure; the message carries the field path."""


DEFAULT_RADAR_GRID = GridSpec((-np.pi / 3, np.pi / 3), (-np.pi / 12, np.pi / 12), 256, 64)


@dataclass
class RadarSetup:
    waveform: WaveformConfig
    array: ArrayConfig
    grid: GridSpec = DEFAULT_RADAR_GRID


@dataclass
class Scenario:
    frames: list
    rig: RigConfig
    frame_rate_hz: float = 10.0
    seed: int = 0
    radar: Optional[RadarSetup] = None
    lidar: Optional[LidarConfig] = None
    # raw blocks as read, so dump() can echo optional content faithfully
    source: dict = field(default_factory=dict, repr=False)


_SCHEMA_TOP = {"meta", "radar", "lidar", "rig", "frames"}
_SCHEMA_META = {"frame_rate_hz", "seed"}
_SCHEMA_RADAR = {"f0_hz", "bandwidth_hz", "chirp_time_s", "inter_chirp_time_s", "n_chirps", "n_samples",
                 "ptx_w", "noise_sigma", "tx_positions_m", "rx_positions_m", "gain_exponent", "grid"}
_SCHEMA_LIDAR = {"grid", "max_range_m", "intensity_ref", "attenuation_scale_m", "noise_var_coeff_m",
                 "dropout_floor", "width_px", "height_px", "intrinsics"}
_SCHEMA_GRID = {"az_fov_deg", "el_fov_deg", "n_az", "n_el"}
_SCHEMA_FRAME = {"t", "ego", "actors"}
_SCHEMA_EGO = {"position", "yaw_deg", "rotation", "velocity"}
_SCHEMA_ACTOR = {"shape", "velocity", "class_id", "reflectivity", "rcs_m2"}
_SHAPES = {"sphere": {"center", "radius"}, "triangle": {"v0", "v1", "v2"}, "quad": {"corner", "edge_u", "edge_v"}}


def _obj(node, where: str, allowed: set, required: set = frozenset()) -> dict:
    if not isinstance(node, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = sorted(set(node) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {', '.join(unknown)}")
    for key in sorted(required):
        if key not in node:
            raise ScenarioError(f"{where}: missing key '{key}'")
    return node


def _num(node, where: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ScenarioError(f"{where}: expected a number")
    return float(node)


def _int(node, where: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ScenarioError(f"{where}: expected an integer")
    return node


def _vec(node, where: str) -> np.ndarray:
    if not (isinstance(node, list) and len(node) == 3):
        raise ScenarioError(f"{where}: expected a list of 3 numbers")
    return np.array([_num(x, f"{where}[{i}]") for i, x in enumerate(node)])


def _vecs(node, where: str) -> np.ndarray:
    if not isinstance(node, list) or not node:
        raise ScenarioError(f"{where}: expected a non-empty list of 3-vectors")
    return np.array([_vec(v, f"{where}[{i}]") for i, v in enumerate(node)])


def _pose(node: dict, where: str) -> Pose:
    pos = _vec(node.get("position", [0.0, 0.0, 0.0]), f"{where}.position")
    if "rotation" in node and "yaw_deg" in node:
        raise ScenarioError(f"{where}: give either yaw_deg or rotation, not both")
    try:
        if "rotation" in node:
            rot = node["rotation"]
            if not (isinstance(rot, list) and len(rot) == 3):
                raise ScenarioError(f"{where}.rotation: expected a 3x3 matrix")
            return Pose(pos, np.array([_vec(r, f"{where}.rotation[{i}]") for i, r in enumerate(rot)]))
        yaw = _num(node.get("yaw_deg", 0.0), f"{where}.yaw_deg")
        return Pose(pos, yaw_rotation(np.radians(yaw)))
    except SceneError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _grid(node, where: str, default: GridSpec) -> GridSpec:
    if node is None:
        return default
    _obj(node, where, _SCHEMA_GRID)
    az = node.get("az_fov_deg", list(np.degrees(default.az_fov)))
    el = node.get("el_fov_deg", list(np.degrees(default.el_fov)))
    try:
        return GridSpec(
            tuple(np.radians([_num(a, f"{where}.az_fov_deg") for a in az])),
            tuple(np.radians([_num(e, f"{where}.el_fov_deg") for e in el])),
            _int(node.get("n_az", default.n_az), f"{where}.n_az"),
            _int(node.get("n_el", default.n_el), f"{where}.n_el"),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def parse_radar(node) -> RadarSetup:
    where = "radar"
    _obj(node, where, _SCHEMA_RADAR)
    d = WaveformConfig()
    num = lambda k, dv: _num(node.get(k, dv), f"{where}.{k}")  # noqa: E731
    try:
        wf = WaveformConfig(
            f0=num("f0_hz", d.f0),
            bandwidth=num("bandwidth_hz", d.bandwidth),
            chirp_time=num("chirp_time_s", d.chirp_time),
            inter_chirp_time=num("inter_chirp_time_s", d.inter_chirp_time),
            n_chirps=_int(node.get("n_chirps", d.n_chirps), f"{where}.n_chirps"),
            n_samples=_int(node.get("n_samples", d.n_samples), f"{where}.n_samples"),
            ptx_w=num("ptx_w", d.ptx_w),
            noise_sigma=num("noise_sigma", d.noise_sigma),
        )
        gain_n = num("gain_exponent", 2.0)
        if ("tx_positions_m" in node) != ("rx_positions_m" in node):
            raise ScenarioError(f"{where}: tx_positions_m and rx_positions_m go together")
        if "tx_positions_m" in node:
            array = ArrayConfig(_vecs(node["tx_positions_m"], f"{where}.tx_positions_m"),
                                _vecs(node["rx_positions_m"], f"{where}.rx_positions_m"), gain_n)
        else:
            array = default_array(wf.wavelength, gain_exponent=gain_n)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    return RadarSetup(wf, array, _grid(node.get("grid"), f"{where}.grid", DEFAULT_RADAR_GRID))


def parse_lidar(node) -> LidarConfig:
    where = "lidar"
    _obj(node, where, _SCHEMA_LIDAR)
    d = LidarConfig()
    num = lambda k, dv: _num(node.get(k, dv), f"{where}.{k}")  # noqa: E731
    K = None
    if "intrinsics" in node:
        kn = _obj(node["intrinsics"], f"{where}.intrinsics", {"fx", "fy", "cx", "cy"}, {"fx", "fy", "cx", "cy"})
        K = np.array([[_num(kn["fx"], "fx"), 0.0, _num(kn["cx"], "cx")],
                      [0.0, _num(kn["fy"], "fy"), _num(kn["cy"], "cy")],
                      [0.0, 0.0, 1.0]])
    try:
        return LidarConfig(
            grid=_grid(node.get("grid"), f"{where}.grid", d.grid),
            max_range=num("max_range_m", d.max_range),
            intensity_ref=num("intensity_ref", d.intensity_ref),
            attenuation_scale=num("attenuation_scale_m", d.attenuation_scale),
            noise_var_coeff=num("noise_var_coeff_m", d.noise_var_coeff),
            dropout_floor=num("dropout_floor", d.dropout_floor),
            width=_int(node.get("width_px", d.width), f"{where}.width_px"),
            height=_int(node.get("height_px", d.height), f"{where}.height_px"),
            intrinsics=K,
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"{where}: {exc}") from None


def _actor(node, where: str) -> Actor:
    _obj(node, where, _SCHEMA_ACTOR, {"shape"})
    shape = _obj(node["shape"], f"{where}.shape", {"type", "params"}, {"type", "params"})
    kind = shape["type"]
    if kind not in _SHAPES:
        raise ScenarioError(f"{where}.shape.type: unknown shape {kind!r}")
    params = _obj(shape["params"], f"{where}.shape.params", _SHAPES[kind], _SHAPES[kind])
    pw = f"{where}.shape.params"
    try:
        if kind == "sphere":
            prim = Sphere(_vec(params["center"], f"{pw}.center"), _num(params["radius"], f"{pw}.radius"))
        elif kind == "triangle":
            prim = Triangle(*(_vec(params[k], f"{pw}.{k}") for k in ("v0", "v1", "v2")))
        else:
            prim = Quad(*(_vec(params[k], f"{pw}.{k}") for k in ("corner", "edge_u", "edge_v")))
        rcs = node.get("rcs_m2")
        return Actor(
            prim,
            _vec(node.get("velocity", [0.0, 0.0, 0.0]), f"{where}.velocity"),
            Material(_int(node.get("class_id", 0), f"{where}.class_id"),
                     _num(node.get("reflectivity", 0.5), f"{where}.reflectivity")),
            None if rcs is None else _num(rcs, f"{where}.rcs_m2"),
        )
    except SceneError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _frame(node, where: str) -> SceneFrame:
    _obj(node, where, _SCHEMA_FRAME, {"t"})
    ego = _obj(node.get("ego", {}), f"{where}.ego", _SCHEMA_EGO)
    actors = node.get("actors", [])
    if not isinstance(actors, list):
        raise ScenarioError(f"{where}.actors: expected a list")
    return SceneFrame(
        timestamp=_num(node["t"], f"{where}.t"),
        actors=tuple(_actor(a, f"{where}.actors[{i}]") for i, a in enumerate(actors)),
        ego_pose=_pose(ego, f"{where}.ego"),
        ego_velocity=_vec(ego.get("velocity", [0.0, 0.0, 0.0]), f"{where}.ego.velocity"),
    )


def _rig(node) -> RigConfig:
    if node is None:
        return default_rig()
    _obj(node, "rig", {"mounts"}, {"mounts"})
    mounts = node["mounts"]
    if not isinstance(mounts, list) or not mounts:
        raise ScenarioError("rig.mounts: expected a non-empty list")
    out = []
    for i, m in enumerate(mounts):
        where = f"rig.mounts[{i}]"
        _obj(m, where, {"position", "yaw_deg", "rotation", "suite"})
        out.append(Mount(_pose(m, where), _int(m.get("suite", i), f"{where}.suite")))
    return RigConfig(tuple(out))


def parse_scenario(doc: Any) -> Scenario:
    _obj(doc, "scenario", _SCHEMA_TOP, {"frames"})
    meta = _obj(doc.get("meta", {}), "meta", _SCHEMA_META)
    frames_node = doc["frames"]
    if not isinstance(frames_node, list):
        raise ScenarioError("frames: expected a list")
    frames = [_frame(f, f"frames[{i}]") for i, f in enumerate(frames_node)]
    frames.sort(key=lambda f: f.timestamp)
    rate = _num(meta.get("frame_rate_hz", 10.0), "meta.frame_rate_hz")
    if rate <= 0:
        raise ScenarioError("meta.frame_rate_hz: must be positive")
    return Scenario(
        frames=frames,
        rig=_rig(doc.get("rig")),
        frame_rate_hz=rate,
        seed=_int(meta.get("seed", 0), "meta.seed"),
        radar=parse_radar(doc["radar"]) if "radar" in doc else None,
        lidar=parse_lidar(doc["lidar"]) if "lidar" in doc else None,
        source=doc,
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; frames come back sorted by timestamp."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_scenario(doc)


# --- serialization ----------------------------------------------------------

def _l(v) -> list:
    return [float(x) for x in np.asarray(v).ravel()]


def _pose_doc(pose: Pose) -> dict:
    return {"position": _l(pose.position), "rotation": [_l(r) for r in pose.rotation]}


def _actor_doc(a: Actor) -> dict:
    p = a.primitive
    if isinstance(p, Sphere):
        shape = {"type": "sphere", "params": {"center": _l(p.center), "radius": float(p.radius)}}
    elif isinstance(p, Triangle):
        shape = {"type": "triangle", "params": {k: _l(getattr(p, k)) for k in ("v0", "v1", "v2")}}
    else:
        shape = {"type": "quad", "params": {k: _l(getattr(p, k)) for k in ("corner", "edge_u", "edge_v")}}
    doc = {"shape": shape, "velocity": _l(a.velocity), "class_id": int(a.material.class_id),
           "reflectivity": float(a.material.reflectivity)}
    if a.rcs_override is not None:
        doc["rcs_m2"] = float(a.rcs_override)
    return doc


def frame_doc(f: SceneFrame) -> dict:
    ego = _pose_doc(f.ego_pose)
    ego["velocity"] = _l(f.ego_velocity)
    return {"t": float(f.timestamp), "ego": ego, "actors": [_actor_doc(a) for a in f.actors]}


def scenario_doc(sc: Scenario) -> dict:
    doc = {
        "meta": {"frame_rate_hz": sc.frame_rate_hz, "seed": sc.seed},
        "rig": {"mounts": [{**_pose_doc(m.pose), "suite": m.suite} for m in sc.rig.mounts]},
        "frames": [frame_doc(f) for f in sc.frames],
    }
    for key in ("radar", "lidar"):
        if key in sc.source:
            doc[key] = sc.source[key]
    return doc


def dump_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_doc(sc), indent=1) + "\n", encoding="utf-8")


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. ``"guardrail"``)."""
    return Path(__file__).with_name("scenarios") / f"{name}.json"
