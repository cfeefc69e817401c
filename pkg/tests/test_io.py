import numpy as np
import pytest

from raysense import io as rio
from raysense.lidar_sim import LidarMaps, LidarPoints
from raysense.radar_model import WaveformConfig, default_array
from raysense.radar_synth import RadarCube


def _random_cube(shape=(12, 32, 64), seed=0):
    rs = np.random.default_rng(seed)
    return (rs.standard_normal(shape) + 1j * rs.standard_normal(shape)).astype(np.complex64)


def test_zero_cube_file_size(tmp_path):
    p = tmp_path / "z.bin"
    rio.write_cube(np.zeros((1, 2, 4), dtype=np.complex64), p)
    assert p.stat().st_size == 8 + 4 + 12 + 64 + 8 == 96


def test_cube_round_trip_bit_equal(tmp_path):
    data = _random_cube()
    cfg = WaveformConfig(n_chirps=32, n_samples=64)
    cube = RadarCube(data, cfg, default_array(cfg.wavelength))
    p = tmp_path / "c.bin"
    rio.write_cube(cube, p)
    back = rio.read_cube(p, cfg, cube.array)
    assert back.data.tobytes() == data.tobytes()
    assert rio.read_cube(p).data.shape == data.shape


def _corrupt(tmp_path, mutate):
    p = tmp_path / "c.bin"
    rio.write_cube(_random_cube((2, 4, 8)), p)
    raw = bytearray(p.read_bytes())
    p.write_bytes(bytes(mutate(raw)))
    return p


def test_corrupted_footer_rejected(tmp_path):
    def bump(raw):
        raw[-8] ^= 0x01
        return raw
    with pytest.raises(rio.CubeFormatError, match="integrity"):
        rio.read_cube_data(_corrupt(tmp_path, bump))


@pytest.mark.parametrize("mutate, fragment", [
    (lambda r: b"XXXXXXXX" + r[8:], "magic"),
    (lambda r: r[:8] + b"\x02\x00\x00\x00" + r[12:], "version"),
    (lambda r: r[:-20], "truncated"),
    (lambda r: r[:10], "too short"),
])
def test_malformed_cube_rejected(tmp_path, mutate, fragment):
    with pytest.raises(rio.CubeFormatError, match=fragment):
        rio.read_cube_data(_corrupt(tmp_path, mutate))


def test_cube_header_layout():
    raw = rio.cube_bytes(np.zeros((3, 2, 4), dtype=np.complex64))
    assert raw[:8] == b"SCRLCUBE"
    assert np.frombuffer(raw[8:24], "<u4").tolist() == [1, 3, 2, 4]
    assert int(np.frombuffer(raw[-8:], "<u8")[0]) == 24


def test_pgm_constant_map(tmp_path):
    p = tmp_path / "c.pgm"
    rio.write_map_pgm(np.full((3, 4), 2.5), -60.0, p)
    img = rio.read_pgm(p)
    assert img.shape == (3, 4)
    assert (img == 65535).all()
    assert p.read_bytes().startswith(b"P5\n4 3\n65535\n")


def test_pgm_two_value_map(tmp_path):
    p = tmp_path / "t.pgm"
    values = np.array([[1.0, 1e-3], [1e-3, 1.0]])  # 0 dB and -60 dB
    info = rio.write_map_pgm(values, -60.0, p, sidecar={"kind": "test"})
    np.testing.assert_array_equal(rio.read_pgm(p), [[65535, 0], [0, 65535]])
    assert info["floor_db"] == -60.0
    assert p.with_suffix(".json").exists()


def test_pgm_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        rio.write_map_pgm(np.ones((2, 2)), 0.0, tmp_path / "a.pgm")
    with pytest.raises(ValueError):
        rio.write_map_pgm(np.array([[np.nan, 1.0]]), -60.0, tmp_path / "b.pgm")


def test_csv_round_trip_float32(tmp_path):
    values = np.random.default_rng(1).random((7, 9)).astype(np.float32)
    p = tmp_path / "m.csv"
    rio.write_map_csv(values, p)
    back = rio.read_map_csv(p)
    assert back.shape == values.shape
    np.testing.assert_array_max_ulp(back.astype(np.float32), values, maxulp=1)


def test_pointcloud_round_trip(tmp_path):
    rs = np.random.default_rng(2)
    n = 50
    pts = LidarPoints(rs.uniform(-50, 50, (n, 3)), rs.uniform(1, 100, n), rs.uniform(-10, 10, n),
                      rs.random(n), rs.integers(0, 20, n), np.arange(n))
    p = tmp_path / "pc.txt"
    rio.write_pointcloud(pts, p)
    table = rio.read_pointcloud(p)
    assert table.shape == (n, 7)
    np.testing.assert_allclose(table[:, :3], pts.position, rtol=1e-8)
    np.testing.assert_array_equal(table[:, 6], pts.class_id)
    empty = tmp_path / "e.txt"
    rio.write_pointcloud(LidarPoints.empty(), empty)
    assert rio.read_pointcloud(empty).shape == (0, 7)


def test_lidar_maps_round_trip(tmp_path):
    h, w = 4, 6
    maps = LidarMaps(np.zeros((h, w)), np.zeros((h, w)), np.zeros((h, w), dtype=np.int64),
                     np.zeros((h, w)), np.full((h, w), -1))
    maps.depth[1, 2], maps.doppler[1, 2], maps.semantic[1, 2], maps.intensity[1, 2] = 12.5, -3.25, 7, 0.125
    maps.owner[1, 2] = 0
    p = tmp_path / "lm.csv"
    rio.write_lidar_maps(maps, p)
    back = rio.read_lidar_maps(p)
    for key in ("depth", "doppler", "semantic", "intensity"):
        np.testing.assert_array_equal(back[key], getattr(maps, key))


def test_writers_are_deterministic(tmp_path):
    values = np.random.default_rng(3).random((5, 5))
    rio.write_map_pgm(values, -40, tmp_path / "a.pgm")
    rio.write_map_pgm(values, -40, tmp_path / "b.pgm")
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()
