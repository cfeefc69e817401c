"""Regenerate the bundled scenario fixtures under src/raysense/scenarios/."""

import json
from pathlib import Path

import numpy as np

from raysense.scenario import frame_doc
from raysense.scene import Actor, Material, Pose, Quad, SceneFrame, Sphere

OUT = Path(__file__).resolve().parents[1] / "src" / "raysense" / "scenarios"

REF_RADAR = {
    "f0_hz": 77e9,
    "bandwidth_hz": 300e6,
    "chirp_time_s": 30e-6,
    "inter_chirp_time_s": 8e-6,
    "n_chirps": 256,
    "n_samples": 512,
    "ptx_w": 1.0,
    "noise_sigma": 1e-9,
    "gain_exponent": 2.0,
}

FRONT_CENTER = {"mounts": [{"position": [2.0, 0.0, 0.5], "yaw_deg": 0.0, "suite": 1}]}


def _frames(first: SceneFrame, n: int, rate_hz: float) -> list:
    frames, f = [], first
    for _ in range(n):
        frames.append(frame_doc(f))
        f = f.advanced(1.0 / rate_hz)
    return frames


def guardrail() -> dict:
    # ego at 10 m/s along +x; a guardrail sweeping across the road ahead
    # (a bend) and a lead car pulling away at 15 m/s
    ego_v = np.array([10.0, 0.0, 0.0])
    p1 = np.array([4.0, 5.0, 0.2])
    p2 = np.array([20.0, -5.0, 0.2])
    rail = Actor(Quad(p1, p2 - p1, [0.0, 0.0, 0.8]), [0.0, 0.0, 0.0], Material(class_id=3, reflectivity=0.6))
    car = Actor(Sphere([14.0, -6.0, 0.8], 1.0), [15.0, 0.0, 0.0], Material(class_id=10, reflectivity=0.8))
    first = SceneFrame(0.0, (rail, car), Pose.from_yaw([0.0, 0.0, 0.0], 0.0), ego_v)
    return {
        "meta": {"frame_rate_hz": 10.0, "seed": 2024},
        "radar": REF_RADAR,
        "rig": FRONT_CENTER,
        "frames": _frames(first, 3, 10.0),
    }


def point_target() -> dict:
    # calibration sphere with a 1 m^2 override; nearest face 50 m from the mount
    tgt = Actor(Sphere([53.0, 0.0, 0.5], 1.0), [0.0, 0.0, 0.0], Material(class_id=1, reflectivity=1.0), 1.0)
    first = SceneFrame(0.0, (tgt,), Pose.identity(), [0.0, 0.0, 0.0])
    return {
        "meta": {"frame_rate_hz": 10.0, "seed": 7},
        "radar": REF_RADAR,
        "rig": FRONT_CENTER,
        "frames": _frames(first, 1, 10.0),
    }


def ref_radar() -> dict:
    return {"meta": {"frame_rate_hz": 10.0, "seed": 0}, "radar": REF_RADAR, "frames": []}


if __name__ == "__main__":
    for name, fn in (("guardrail", guardrail), ("point_target", point_target), ("ref_radar", ref_radar)):
        (OUT / f"{name}.json").write_text(json.dumps(fn(), indent=1) + "\n", encoding="utf-8")
        print("wrote", OUT / f"{name}.json")
