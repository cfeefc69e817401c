"""DFT processing: range-Doppler maps, per-cell DoA, 3D map assembly and 2D cuts.

Doppler axes are ordered by range rate: row ``N_d/2 + b`` holds range rate
``b * vel_res``, so closing targets land at negative offsets from the center.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .radar_model import derived_params, virtual_array
from .radar_synth import RadarCube


def window(kind: str, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("window length must be >= 1")
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        if n == 1:
            return np.ones(1)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))
    raise ValueError(f"unknown window kind {kind!r}")


@dataclass
class RdMap:
    """Range-Doppler map: complex (channel, doppler, range) or magnitude (doppler, range)."""

    data: np.ndarray
    range_axis: np.ndarray
    rate_axis: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)


@dataclass
class RdaMap:
    """Magnitudes over (angle, doppler, range)."""

    data: np.ndarray
    angle_axis: np.ndarray
    range_axis: np.ndarray
    rate_axis: np.ndarray


def axes_for(cube: RadarCube) -> tuple[np.ndarray, np.ndarray]:
    p = derived_params(cube.cfg)
    n_d, n_r = cube.cfg.n_chirps, cube.cfg.n_samples
    range_axis = np.arange(n_r) * p.range_res
    rate_axis = (np.arange(n_d) - n_d // 2) * p.vel_res
    return range_axis, rate_axis


def _check_pow2(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise ValueError(f"FFT length {n} is not a power of two")


def range_doppler(cube: RadarCube, window_kind: str = "hann") -> RdMap:
    """Windowed 2D FFT per channel.

    Range bin ``k`` of row ``l`` equals
    ``sum_{m,n} w_d[m] w_r[n] x[m,n] exp(-j2pi k n/N_r) exp(+j2pi (l - N_d/2) m/N_d)``.
    The slow-time kernel sign puts positive range rates at positive offsets.
    """
    data = np.asarray(cube.data)
    if data.ndim != 3:
        raise ValueError("cube data must be 3-D (channel, chirp, sample)")
    n_ch, n_d, n_r = data.shape
    if (n_d, n_r) != (cube.cfg.n_chirps, cube.cfg.n_samples):
        raise ValueError("cube shape does not match its waveform config")
    _check_pow2(n_d)
    _check_pow2(n_r)
    w = window(window_kind, n_d)[:, None] * window(window_kind, n_r)[None, :]
    x = data.astype(np.complex128) * w
    spec = np.fft.fft(x, axis=2)
    # exp(+j) slow-time kernel == N * ifft
    spec = np.fft.ifft(spec, axis=1) * n_d
    spec = np.fft.fftshift(spec, axes=1)
    range_axis, rate_axis = axes_for(cube)
    return RdMap(spec, range_axis, rate_axis, {"window": window_kind})


def combine_channels(rd: RdMap) -> RdMap:
    """Noncoherent sum of channel magnitudes."""
    data = rd.data
    if data.ndim == 2:
        mag = np.abs(data)
    else:
        mag = np.abs(data).sum(axis=0)
    return RdMap(mag, rd.range_axis, rd.rate_axis, dict(rd.meta))


def steering_phases(virtual_positions, angle_grid, wavelength: float) -> np.ndarray:
    """Two-way phase advance exp(+j k u(a).p) for each (angle, element)."""
    p = np.asarray(virtual_positions, dtype=np.float64).reshape(-1, 3)
    a = np.asarray(angle_grid, dtype=np.float64)
    u = np.stack([np.cos(a), np.sin(a), np.zeros_like(a)], axis=1)
    return np.exp(1j * (2.0 * np.pi / wavelength) * (u @ p.T))


def doa_spectrum(v, virtual_positions, angle_grid, wavelength: float) -> np.ndarray:
    """Matched-filter angular spectrum |a(alpha)^H v| of one measurement vector.

    Works for any (including sparse) virtual array. For a uniform lambda/2
    line array it equals a DFT over the elements evaluated at sin-spaced angles.
    """
    v = np.asarray(v)
    p = np.asarray(virtual_positions, dtype=np.float64).reshape(-1, 3)
    if v.shape[-1] != len(p):
        raise ValueError(f"measurement vector has {v.shape[-1]} entries for {len(p)} elements")
    return np.abs(v @ steering_phases(p, angle_grid, wavelength).T)


def default_angle_grid() -> np.ndarray:
    return np.radians(np.linspace(-90.0, 90.0, 181))


def rda_map(rd: RdMap, virtual_positions, angle_grid, wavelength: float,
            block: int = 16) -> RdaMap:
    """DoA spectrum for every range-Doppler cell; float32 magnitudes."""
    if not rd.is_complex or rd.data.ndim != 3:
        raise ValueError("rda_map needs per-channel complex range-Doppler data")
    n_ch, n_d, n_r = rd.data.shape
    p = np.asarray(virtual_positions, dtype=np.float64).reshape(-1, 3)
    if len(p) != n_ch:
        raise ValueError("virtual array size does not match channel count")
    steer = steering_phases(p, angle_grid, wavelength)           # (A, ch)
    out = np.empty((len(angle_grid), n_d, n_r), dtype=np.float32)
    for start in range(0, n_d, block):
        chunk = rd.data[:, start:start + block, :].reshape(n_ch, -1)
        out[:, start:start + block, :] = np.abs(steer @ chunk).reshape(len(angle_grid), -1, n_r)
    return RdaMap(out, np.asarray(angle_grid, dtype=np.float64), rd.range_axis, rd.rate_axis)


def range_azimuth_cut(rda: RdaMap, mode: str = "max_over_doppler", doppler_bin: int | None = None) -> np.ndarray:
    """2D (angle, range) cut of the 3D map.

    ``mode`` is ``"max_over_doppler"`` or ``"at_doppler_bin"`` (with
    ``doppler_bin`` counted from the zero-rate row, negative = closing).
    """
    if mode == "max_over_doppler":
        return rda.data.max(axis=1)
    if mode == "at_doppler_bin":
        if doppler_bin is None:
            raise ValueError("at_doppler_bin mode needs doppler_bin")
        center = rda.data.shape[1] // 2
        return rda.data[:, center + doppler_bin, :]
    raise ValueError(f"unknown cut mode {mode!r}")


def to_db(values, floor_db: float = -60.0) -> np.ndarray:
    """Magnitude to dB relative to the map peak, clamped below at ``floor_db``."""
    mag = np.abs(np.asarray(values, dtype=np.float64))
    peak = mag.max() if mag.size else 0.0
    if peak <= 0.0:
        return np.zeros_like(mag)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return np.maximum(db, floor_db)


def peak_list(values, threshold_db: float = -30.0, max_peaks: int = 20) -> list[tuple[tuple, float]]:
    """Strict local maxima (all neighbors lower) at or above ``threshold_db`` re. peak.

    Returns ``(index, magnitude)`` pairs sorted by descending magnitude.
    """
    mag = np.abs(np.asarray(values, dtype=np.float64))
    if mag.size == 0 or mag.max() <= 0.0:
        return []
    footprint = np.ones((3,) * mag.ndim, dtype=bool)
    footprint[(1,) * mag.ndim] = False
    neighbor_max = ndimage.maximum_filter(mag, footprint=footprint, mode="constant", cval=-np.inf)
    thresh = mag.max() * 10.0 ** (threshold_db / 20.0)
    idx = np.argwhere((mag > neighbor_max) & (mag >= thresh))
    vals = mag[tuple(idx.T)]
    order = np.lexsort((np.arange(len(vals)), -vals))[:max_peaks]
    return [(tuple(int(i) for i in idx[k]), float(vals[k])) for k in order]


@dataclass
class RadarProducts:
    rd: RdMap
    rd_magnitude: RdMap
    ra: np.ndarray
    ra_angles: np.ndarray


def process_cube(cube: RadarCube, window_kind: str = "hann", fov_deg: float = 45.0) -> RadarProducts:
    """Full chain used by the CLI: RD map plus the range-azimuth cut over the FoV."""
    rd = range_doppler(cube, window_kind)
    grid = default_angle_grid()
    grid = grid[np.abs(grid) <= np.radians(fov_deg) + 1e-12]
    rda = rda_map(rd, virtual_array(cube.array), grid, cube.cfg.wavelength)
    ra = range_azimuth_cut(rda)
    return RadarProducts(rd, combine_channels(rd), ra, grid)
