"""FMCW waveform, MIMO antenna geometry, radar equation and hit-to-scatterer conversion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .raycast import Hits, angles_from_vectors

C = 299_792_458.0


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WaveformConfig:
    """Chirp-sequence parameters. Defaults describe a 77 GHz, 300 MHz automotive chirp sequence."""

    f0: float = 77e9
    bandwidth: float = 300e6
    chirp_time: float = 30e-6
    inter_chirp_time: float = 8e-6
    n_chirps: int = 256
    n_samples: int = 512
    ptx_w: float = 1.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        for name in ("f0", "bandwidth", "chirp_time", "inter_chirp_time", "ptx_w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not (_is_pow2(self.n_chirps) and _is_pow2(self.n_samples)):
            raise ValueError("n_chirps and n_samples must be powers of two")

    @property
    def slope(self) -> float:
        return self.bandwidth / self.chirp_time

    @property
    def fs(self) -> float:
        return self.n_samples / self.chirp_time

    @property
    def pri(self) -> float:
        return self.chirp_time + self.inter_chirp_time

    @property
    def wavelength(self) -> float:
        return C / self.f0


@dataclass(frozen=True)
class DerivedParams:
    range_res: float
    max_range: float
    vel_res: float
    vel_max: float
    k: float
    fs: float
    wavelength: float


def derived_params(cfg: WaveformConfig) -> DerivedParams:
    range_res = C / (2.0 * cfg.bandwidth)
    lam = cfg.wavelength
    return DerivedParams(
        range_res=range_res,
        max_range=cfg.n_samples * range_res,
        vel_res=lam / (2.0 * cfg.n_chirps * cfg.pri),
        vel_max=lam / (4.0 * cfg.pri),
        k=cfg.slope,
        fs=cfg.fs,
        wavelength=lam,
    )


@dataclass(frozen=True)
class ArrayConfig:
    """TX/RX element positions in the sensor frame and the cos^n element pattern."""

    tx_positions: np.ndarray
    rx_positions: np.ndarray
    gain_exponent: float = 2.0

    def __post_init__(self):
        tx = np.atleast_2d(np.asarray(self.tx_positions, dtype=np.float64))
        rx = np.atleast_2d(np.asarray(self.rx_positions, dtype=np.float64))
        if tx.shape[-1] != 3 or rx.shape[-1] != 3 or len(tx) < 1 or len(rx) < 1:
            raise ValueError("need at least one TX and one RX position, each with 3 components")
        if not (np.all(np.isfinite(tx)) and np.all(np.isfinite(rx))):
            raise ValueError("antenna positions must be finite")
        if self.gain_exponent < 0:
            raise ValueError("gain_exponent must be >= 0")
        object.__setattr__(self, "tx_positions", tx)
        object.__setattr__(self, "rx_positions", rx)

    @property
    def n_channels(self) -> int:
        return len(self.tx_positions) * len(self.rx_positions)

    def __eq__(self, other):
        if not isinstance(other, ArrayConfig):
            return NotImplemented
        return (np.array_equal(self.tx_positions, other.tx_positions)
                and np.array_equal(self.rx_positions, other.rx_positions)
                and self.gain_exponent == other.gain_exponent)

    __hash__ = None


def default_array(wavelength: float, n_tx: int = 3, n_rx: int = 4, gain_exponent: float = 2.0) -> ArrayConfig:
    """Uniform lambda/2 virtual line array along sensor y, centered on the origin.

    RX elements sit lambda/2 apart and TX elements n_rx*lambda/2 apart, so the
    TX+RX sums fill a gap-free lattice.
    """
    half = wavelength / 2.0
    rx_y = (np.arange(n_rx) - (n_rx - 1) / 2.0) * half
    tx_y = (np.arange(n_tx) - (n_tx - 1) / 2.0) * n_rx * half
    tx = np.stack([np.zeros(n_tx), tx_y, np.zeros(n_tx)], axis=1)
    rx = np.stack([np.zeros(n_rx), rx_y, np.zeros(n_rx)], axis=1)
    return ArrayConfig(tx, rx, gain_exponent)


def virtual_array(array: ArrayConfig) -> np.ndarray:
    """Virtual element positions, TX-major then RX, shape (N_tx * N_rx, 3)."""
    return (array.tx_positions[:, None, :] + array.rx_positions[None, :, :]).reshape(-1, 3)


def antenna_gain(array: ArrayConfig, az, el):
    """One-way element gain cos^n(az) * cos^n(el), zero outside +/-90 degrees."""
    az = np.asarray(az, dtype=np.float64)
    el = np.asarray(el, dtype=np.float64)
    inside = (np.abs(az) < np.pi / 2) & (np.abs(el) < np.pi / 2)
    n = array.gain_exponent
    g = np.abs(np.cos(az)) ** n * np.abs(np.cos(el)) ** n
    g = np.where(inside, g, 0.0)
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class PointTarget:
    position: np.ndarray
    range_rate: float = 0.0
    sigma: float = 1.0
    amplitude_scale: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64)
        object.__setattr__(self, "position", p)
        if self.sigma < 0:
            raise ValueError("RCS must be >= 0")
        if not np.linalg.norm(p) > 0:
            raise ValueError("target cannot sit at the sensor origin")


@dataclass
class TargetSet:
    """Array form of many point targets, kept in list order."""

    position: np.ndarray
    range_rate: np.ndarray
    sigma: np.ndarray
    amplitude_scale: np.ndarray = field(default=None)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(-1, 3)
        n = len(self.position)
        self.range_rate = np.broadcast_to(np.asarray(self.range_rate, dtype=np.float64), (n,)).copy()
        self.sigma = np.broadcast_to(np.asarray(self.sigma, dtype=np.float64), (n,)).copy()
        if self.amplitude_scale is None:
            self.amplitude_scale = np.ones(n)
        self.amplitude_scale = np.broadcast_to(np.asarray(self.amplitude_scale, dtype=np.float64), (n,)).copy()

    def __len__(self) -> int:
        return len(self.position)

    def __getitem__(self, i) -> PointTarget:
        return PointTarget(self.position[i], float(self.range_rate[i]), float(self.sigma[i]),
                           float(self.amplitude_scale[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_targets(cls, targets) -> "TargetSet":
        if isinstance(targets, TargetSet):
            return targets
        targets = list(targets)
        if not targets:
            return cls(np.zeros((0, 3)), np.zeros(0), np.zeros(0), np.zeros(0))
        return cls(
            np.array([t.position for t in targets]),
            np.array([t.range_rate for t in targets]),
            np.array([t.sigma for t in targets]),
            np.array([t.amplitude_scale for t in targets]),
        )

    def concat(self, other: "TargetSet") -> "TargetSet":
        return TargetSet(
            np.concatenate([self.position, other.position]),
            np.concatenate([self.range_rate, other.range_rate]),
            np.concatenate([self.sigma, other.sigma]),
            np.concatenate([self.amplitude_scale, other.amplitude_scale]),
        )


def received_power(cfg: WaveformConfig, array: ArrayConfig, target) -> np.ndarray:
    """Radar equation with angle-dependent TX and RX gains.

    Accepts a single :class:`PointTarget` (returns float) or a :class:`TargetSet`.
    """
    single = isinstance(target, PointTarget)
    ts = TargetSet.from_targets([target]) if single else target
    d = np.linalg.norm(ts.position, axis=-1)
    if np.any(d == 0):
        raise ValueError("received_power undefined at zero range")
    az, el = angles_from_vectors(ts.position)
    g = antenna_gain(array, az, el)
    lam = cfg.wavelength
    p = cfg.ptx_w * g * g * ts.sigma * lam ** 2 / ((4.0 * np.pi) ** 3 * d ** 4)
    return float(p[0]) if single else p


def channel_delay(tx, rx, target_pos):
    """Exact two-way delay TX -> target -> RX (no plane-wave approximation)."""
    target_pos = np.asarray(target_pos, dtype=np.float64)
    d_tx = np.linalg.norm(target_pos - np.asarray(tx, dtype=np.float64), axis=-1)
    d_rx = np.linalg.norm(target_pos - np.asarray(rx, dtype=np.float64), axis=-1)
    if np.any(d_tx == 0) or np.any(d_rx == 0):
        raise ValueError("target coincides with an antenna element")
    tau = (d_tx + d_rx) / C
    return tau if np.ndim(tau) else float(tau)


def fresnel_scale(incidence, reflectivity):
    """Amplitude scale for reflected power; monotone in incidence angle.

    Stand-in for a full Fresnel coefficient: rho * (0.5 + 0.5 cos theta).
    """
    return np.asarray(reflectivity) * (0.5 + 0.5 * np.cos(incidence))


def hits_to_targets(hits: Hits) -> TargetSet:
    """Convert grid hits into point scatterers in the sensor frame.

    Each hit on an ordinary surface becomes a beam-filling patch with
    sigma = rho * d^2 * dOmega. An actor carrying an RCS override is a
    calibration point target: it contributes exactly one scatterer, at its
    nearest hit, with sigma equal to the override.
    """
    if len(hits) == 0:
        return TargetSet.from_targets([])
    override = ~np.isnan(hits.rcs_override)
    keep = ~override
    if np.any(override):
        for actor in np.unique(hits.actor_index[override]):
            idx = np.flatnonzero(hits.actor_index == actor)
            keep[idx[np.argmin(hits.distance[idx])]] = True
    sel = np.flatnonzero(keep)
    sigma = np.where(override[sel], hits.rcs_override[sel],
                     hits.reflectivity[sel] * hits.distance[sel] ** 2 * hits.solid_angle[sel])
    amp = fresnel_scale(hits.incidence[sel], hits.reflectivity[sel])
    return TargetSet(hits.local_point[sel], hits.range_rate[sel], sigma, amp)
