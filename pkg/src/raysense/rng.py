"""Counter-based keyed random numbers.

Every draw is a pure function of ``(seed, stream, counter)``, so results do
not depend on how work is partitioned across workers or on call order.
The mixer is SplitMix64 evaluated at an explicit counter position.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# stream identifiers used across the package
STREAM_RADAR_NOISE = 1
STREAM_LIDAR_DROPOUT = 2
STREAM_LIDAR_RANGE = 3


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into a 64-bit seed (e.g. frame and sensor index)."""
    state = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = _mix(state + _GOLDEN)
        for key in keys:
            state = _mix(state ^ _mix(np.array([key & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) + _GOLDEN))
    return int(state[0])


def keyed_bits(seed: int, stream: int, counters) -> np.ndarray:
    """64 random bits per counter."""
    counters = np.asarray(counters, dtype=np.uint64)
    base = np.uint64(derive_seed(seed, stream))
    with np.errstate(over="ignore"):
        return _mix(base + (counters + np.uint64(1)) * _GOLDEN)


def keyed_uniform(seed: int, stream: int, counters) -> np.ndarray:
    """Uniform floats in the open interval (0, 1)."""
    bits = keyed_bits(seed, stream, counters)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def keyed_normal(seed: int, stream: int, counters) -> np.ndarray:
    """Standard normals via Box-Muller on counter pairs (2c, 2c+1)."""
    counters = np.asarray(counters, dtype=np.uint64)
    two = np.uint64(2)
    u1 = keyed_uniform(seed, stream, counters * two)
    u2 = keyed_uniform(seed, stream, counters * two + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
