"""Raw MIMO FMCW data-cube synthesis from point scatterers.

Each channel (TX t, RX r) sees, per target, a dechirped tone

    A * exp(j2pi (f_b * t_n + f_d * m * T_PRI + f0 * tau))

with tau the exact two-way TX -> target -> RX delay of that channel.
Geometry is frozen within a frame (stop-and-hop); motion enters only
through the chirp-to-chirp Doppler phase.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .radar_model import (
    C,
    ArrayConfig,
    PointTarget,
    TargetSet,
    WaveformConfig,
    channel_delay,
    received_power,
)

# fixed accumulation block; results must not depend on worker count
_TARGET_BLOCK = 512


@dataclass
class RadarCube:
    """Complex samples laid out (channel, chirp, fast-time sample)."""

    data: np.ndarray
    cfg: WaveformConfig
    array: ArrayConfig

    def __post_init__(self):
        expected = (self.array.n_channels, self.cfg.n_chirps, self.cfg.n_samples)
        if self.data.shape != expected:
            raise ValueError(f"cube shape {self.data.shape} does not match config {expected}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("cube contains non-finite samples")


@dataclass(frozen=True)
class ChannelResponse:
    amplitude: float
    tau: float
    f_b: float
    f_d: float


def doppler_frequency(range_rate, f0: float):
    """Doppler shift for a given range rate; closing targets (negative rate) give f_d > 0."""
    return -2.0 * np.asarray(range_rate, dtype=np.float64) * f0 / C


def target_amplitudes(targets: TargetSet, cfg: WaveformConfig, array: ArrayConfig) -> np.ndarray:
    return np.sqrt(received_power(cfg, array, targets)) * targets.amplitude_scale


def target_channel_response(target: PointTarget, tx, rx, cfg: WaveformConfig,
                            array: ArrayConfig) -> ChannelResponse:
    tau = channel_delay(tx, rx, target.position)
    amp = np.sqrt(received_power(cfg, array, target)) * target.amplitude_scale
    return ChannelResponse(
        amplitude=float(amp),
        tau=tau,
        f_b=cfg.slope * tau,
        f_d=float(doppler_frequency(target.range_rate, cfg.f0)),
    )


def _cis(cycles: np.ndarray) -> np.ndarray:
    # reduce to [0, 1) first so large cycle counts keep full phase precision
    return np.exp(2j * np.pi * np.mod(cycles, 1.0))


def _channel_signal(ts: TargetSet, amp: np.ndarray, fd: np.ndarray, tx, rx,
                    cfg: WaveformConfig) -> np.ndarray:
    n_d, n_r = cfg.n_chirps, cfg.n_samples
    out = np.zeros((n_d, n_r), dtype=np.complex128)
    if len(ts) == 0:
        return out
    m = np.arange(n_d, dtype=np.float64)
    t_n = np.arange(n_r, dtype=np.float64) / cfg.fs
    tau = channel_delay(tx, rx, ts.position)
    for start in range(0, len(ts), _TARGET_BLOCK):
        sl = slice(start, start + _TARGET_BLOCK)
        coef = amp[sl] * _cis(cfg.f0 * tau[sl])
        slow = _cis(np.outer(m * cfg.pri, fd[sl]))           # (n_d, block)
        fast = _cis(np.outer(cfg.slope * tau[sl], t_n))      # (block, n_r)
        out += (slow * coef) @ fast
    return out


def channel_noise(seed: int, channel: int, cfg: WaveformConfig) -> np.ndarray:
    """Circular complex AWGN for one channel, keyed on (seed, channel, chirp, sample)."""
    n = cfg.n_chirps * cfg.n_samples
    idx = (np.uint64(channel) * np.uint64(n) + np.arange(n, dtype=np.uint64)) * np.uint64(2)
    re = rng.keyed_normal(seed, rng.STREAM_RADAR_NOISE, idx)
    im = rng.keyed_normal(seed, rng.STREAM_RADAR_NOISE, idx + np.uint64(1))
    return (cfg.noise_sigma * (re + 1j * im)).reshape(cfg.n_chirps, cfg.n_samples)


def synthesize_cube(targets, cfg: WaveformConfig, array: ArrayConfig, seed: int = 0,
                    workers: int = 1, dtype=np.complex64) -> RadarCube:
    """Superpose all targets on every MIMO channel and add keyed AWGN.

    ``targets`` is a :class:`TargetSet` or any iterable of :class:`PointTarget`.
    Samples are accumulated in double precision and stored as ``dtype``
    (complex64 matches the on-disk cube format). Output is bit-identical for
    any ``workers`` value.
    """
    ts = TargetSet.from_targets(targets)
    amp = target_amplitudes(ts, cfg, array) if len(ts) else np.zeros(0)
    fd = doppler_frequency(ts.range_rate, cfg.f0)
    pairs = [(tx, rx) for tx in array.tx_positions for rx in array.rx_positions]

    def one(ch: int) -> np.ndarray:
        tx, rx = pairs[ch]
        sig = _channel_signal(ts, amp, fd, tx, rx, cfg)
        if cfg.noise_sigma > 0:
            sig += channel_noise(seed, ch, cfg)
        return sig.astype(dtype, copy=False)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chans = list(pool.map(one, range(len(pairs))))
    else:
        chans = [one(ch) for ch in range(len(pairs))]
    return RadarCube(np.stack(chans), cfg, array)
