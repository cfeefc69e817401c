import json

import numpy as np
import pytest

from raysense.radar_model import WaveformConfig
from raysense.raycast import Quad, Sphere
from raysense.scenario import ScenarioError, dump_scenario, load_scenario, parse_scenario
from raysense.scene import default_rig


def _write(tmp_path, doc, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def _sphere_actor(**extra):
    return {"shape": {"type": "sphere", "params": {"center": [10, 0, 0], "radius": 1.0}}, **extra}


def test_minimal_file_one_sphere(tmp_path):
    sc = load_scenario(_write(tmp_path, {"frames": [{"t": 0.0, "actors": [_sphere_actor()]}]}))
    assert len(sc.frames) == 1
    assert len(sc.frames[0].actors) == 1
    assert isinstance(sc.frames[0].actors[0].primitive, Sphere)
    assert sc.radar is None
    assert len(sc.rig.mounts) == len(default_rig().mounts)


def test_negative_radius_names_the_field(tmp_path):
    bad = _sphere_actor()
    bad["shape"]["params"]["radius"] = -1
    with pytest.raises(ScenarioError, match=r"frames\[0\]\.actors\[0\]"):
        load_scenario(_write(tmp_path, {"frames": [{"t": 0, "actors": [bad]}]}))


@pytest.mark.parametrize("doc, fragment", [
    ({"frames": [], "extra": 1}, "unknown key"),
    ({"frames": [{"t": 0, "actors": [_sphere_actor(colour="red")]}]}, "colour"),
    ({"frames": [{"actors": []}]}, "missing key 't'"),
    ({"frames": [{"t": 0, "actors": [{"shape": {"type": "cone", "params": {}}}]}]}, "unknown shape"),
    ({"frames": [{"t": 0, "actors": [_sphere_actor(reflectivity=2.0)]}]}, "reflectivity"),
    ({"frames": [], "radar": {"n_chirps": 100}}, "radar"),
    ({"meta": {"frame_rate_hz": 0}, "frames": []}, "frame_rate_hz"),
    ({"frames": [{"t": 0, "ego": {"rotation": [[1, 0, 0], [0, 1, 0], [0, 0, -1]]}}]}, "ego"),
])
def test_schema_violations(tmp_path, doc, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        load_scenario(_write(tmp_path, doc))


def test_json_syntax_error_reports_location(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "frames": [\n    {"t": 0,,}\n  ]\n}\n')
    with pytest.raises(ScenarioError, match="line 3"):
        load_scenario(p)


def test_frames_sorted_by_timestamp(tmp_path):
    sc = load_scenario(_write(tmp_path, {"frames": [{"t": 0.2}, {"t": 0.0}, {"t": 0.1}]}))
    assert [f.timestamp for f in sc.frames] == [0.0, 0.1, 0.2]


def test_radar_defaults_are_reference():
    sc = parse_scenario({"frames": [], "radar": {}})
    assert sc.radar.waveform == WaveformConfig()
    assert sc.radar.array.n_channels == 12


def test_bundled_guardrail(guardrail_path):
    sc = load_scenario(guardrail_path)
    assert len(sc.frames) == 3
    kinds = sorted(type(a.primitive).__name__ for a in sc.frames[0].actors)
    assert kinds == ["Quad", "Sphere"]
    car = next(a for a in sc.frames[0].actors if isinstance(a.primitive, Sphere))
    rail = next(a for a in sc.frames[0].actors if isinstance(a.primitive, Quad))
    # the car recedes from the ego and the rail is static
    assert car.velocity[0] > sc.frames[0].ego_velocity[0]
    np.testing.assert_array_equal(rail.velocity, 0.0)


@pytest.mark.parametrize("name", ["guardrail", "point_target", "ref_radar"])
def test_dump_load_round_trip(tmp_path, name):
    from raysense.scenario import bundled_scenario

    a = load_scenario(bundled_scenario(name))
    out = tmp_path / "copy.json"
    dump_scenario(a, out)
    b = load_scenario(out)
    assert a.frames == b.frames
    assert a.rig == b.rig
    assert (a.seed, a.frame_rate_hz) == (b.seed, b.frame_rate_hz)
    assert (a.radar is None) == (b.radar is None)
    if a.radar is not None:
        assert a.radar.waveform == b.radar.waveform
        assert a.radar.array == b.radar.array
