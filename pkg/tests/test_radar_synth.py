import math

import numpy as np
import pytest

from raysense.radar_model import C, ArrayConfig, PointTarget, TargetSet, WaveformConfig, default_array
from raysense.radar_synth import (
    RadarCube,
    channel_noise,
    doppler_frequency,
    synthesize_cube,
    target_channel_response,
)

ORIGIN = np.zeros(3)


def test_beat_frequency_50m(ref_cfg, ref_array):
    r = target_channel_response(PointTarget((50, 0, 0)), ORIGIN, ORIGIN, ref_cfg, ref_array)
    assert r.f_b == pytest.approx(1e13 * 2 * 50 / C, rel=1e-12)
    assert r.f_b == pytest.approx(3.3356e6, rel=1e-4)
    assert r.f_d == 0.0


def test_doppler_frequency_closing(ref_cfg, ref_array):
    r = target_channel_response(PointTarget((50, 0, 0), range_rate=-10.0), ORIGIN, ORIGIN, ref_cfg, ref_array)
    assert abs(r.f_d) == pytest.approx(2 * 10 * 77e9 / C, rel=1e-12)
    assert abs(r.f_d) == pytest.approx(5136.9, abs=0.05)
    assert r.f_d > 0
    assert doppler_frequency(10.0, 77e9) == -r.f_d


def test_empty_noiseless_cube_is_zero(small_cfg):
    arr = default_array(small_cfg.wavelength)
    cube = synthesize_cube([], small_cfg, arr)
    assert cube.data.shape == (12, 32, 64)
    assert not np.any(cube.data)


def test_single_tone_per_chirp(ref_cfg):
    arr = ArrayConfig(np.zeros((1, 3)), np.zeros((1, 3)))
    cube = synthesize_cube([PointTarget((50, 0, 0))], ref_cfg, arr, dtype=np.complex128)
    chirp = cube.data[0, 0]
    f_b = 1e13 * 100 / C
    # the exp(+j) tone shows up on the matching positive bin of the inverse-sign DFT
    bin_ = int(np.argmax(np.abs(np.fft.fft(chirp))))
    assert bin_ == round(f_b * ref_cfg.chirp_time) == 100
    # constant envelope
    mag = np.abs(cube.data[0])
    np.testing.assert_allclose(mag, mag[0, 0], rtol=1e-9)


def test_doppler_phase_ramp(small_cfg):
    arr = ArrayConfig(np.zeros((1, 3)), np.zeros((1, 3)))
    rr = -7.3
    cube = synthesize_cube([PointTarget((20, 0, 0), range_rate=rr)], small_cfg, arr, dtype=np.complex128)
    step = cube.data[0, 1:, 5] / cube.data[0, :-1, 5]
    expected = 2 * math.pi * (-2 * rr * 77e9 / C) * small_cfg.pri
    np.testing.assert_allclose(np.angle(step), math.remainder(expected, 2 * math.pi), atol=1e-9)


def test_superposition(small_cfg):
    arr = default_array(small_cfg.wavelength)
    a = PointTarget((12, 3, 0.5), range_rate=2.0, sigma=0.7)
    b = PointTarget((40, -6, 0), range_rate=-4.0, sigma=3.0, amplitude_scale=0.6)
    ca = synthesize_cube([a], small_cfg, arr, dtype=np.complex128).data
    cb = synthesize_cube([b], small_cfg, arr, dtype=np.complex128).data
    cab = synthesize_cube([a, b], small_cfg, arr, dtype=np.complex128).data
    scale = np.abs(cab).max()
    assert np.abs(cab - (ca + cb)).max() <= 1e-12 * scale


def test_near_field_inter_channel_phase():
    cfg = WaveformConfig(n_chirps=4, n_samples=8)
    tx = np.array([[0, -0.5, 0], [0, 0.5, 0]], dtype=float)
    rx = np.array([[0, -0.5, 0], [0, 0.5, 0]], dtype=float)
    arr = ArrayConfig(tx, rx, gain_exponent=0.0)
    target = (2 * math.cos(math.radians(30)), 2 * math.sin(math.radians(30)), 0.0)
    cube = synthesize_cube([PointTarget(target)], cfg, arr, dtype=np.complex128)
    taus = [(math.dist(t, target) + math.dist(r, target)) / C for t in tx for r in rx]
    for ch in range(1, 4):
        measured = np.angle(cube.data[ch, 0, 0] / cube.data[0, 0, 0])
        oracle = math.remainder(2 * math.pi * 77e9 * (taus[ch] - taus[0]), 2 * math.pi)
        assert abs(math.remainder(measured - oracle, 2 * math.pi)) < 1e-6


def test_determinism_across_workers(small_cfg):
    cfg = WaveformConfig(n_chirps=32, n_samples=64, noise_sigma=1e-7)
    arr = default_array(cfg.wavelength)
    rs = np.random.default_rng(0)
    ts = TargetSet(rs.uniform([5, -10, -1], [60, 10, 1], (1100, 3)), rs.uniform(-5, 5, 1100),
                   rs.uniform(0.01, 1, 1100))
    one = synthesize_cube(ts, cfg, arr, seed=9, workers=1).data
    four = synthesize_cube(ts, cfg, arr, seed=9, workers=4).data
    again = synthesize_cube(ts, cfg, arr, seed=9, workers=1).data
    assert one.tobytes() == four.tobytes() == again.tobytes()
    other = synthesize_cube(ts, cfg, arr, seed=10, workers=1).data
    assert one.tobytes() != other.tobytes()


def test_noise_statistics():
    cfg = WaveformConfig(n_chirps=64, n_samples=256, noise_sigma=2.0)
    n0 = channel_noise(5, 0, cfg)
    n1 = channel_noise(5, 1, cfg)
    n = n0.size
    for comp in (n0.real, n0.imag):
        assert abs(comp.mean()) < 5 * 2.0 / math.sqrt(n)
        assert comp.std() == pytest.approx(2.0, rel=0.03)
    # real/imag and channels uncorrelated
    assert abs(np.corrcoef(n0.real.ravel(), n0.imag.ravel())[0, 1]) < 5 / math.sqrt(n)
    assert abs(np.corrcoef(n0.real.ravel(), n1.real.ravel())[0, 1]) < 5 / math.sqrt(n)


def test_cube_shape_validation(small_cfg):
    arr = default_array(small_cfg.wavelength)
    with pytest.raises(ValueError):
        RadarCube(np.zeros((12, 32, 32), dtype=np.complex64), small_cfg, arr)
    bad = np.zeros((12, 32, 64), dtype=np.complex64)
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        RadarCube(bad, small_cfg, arr)
