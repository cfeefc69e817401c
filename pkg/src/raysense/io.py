"""On-disk formats: raw radar cubes, dB-scaled 16-bit PGM maps, CSV maps, point clouds.

Cube file layout (all little-endian)::

    b"SCRLCUBE" | u32 version=1 | u32 N_MIMO, N_d, N_r |
    f32 (re, im) * N_MIMO*N_d*N_r  (channel, chirp, sample order) |
    u64 pair count
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from .radar_dsp import to_db
from .radar_model import ArrayConfig, WaveformConfig, default_array
from .radar_synth import RadarCube

CUBE_MAGIC = b"SCRLCUBE"
CUBE_VERSION = 1
_HEADER = struct.Struct("<8sI3I")
_FOOTER = struct.Struct("<Q")
PGM_MAX = 65535
POINTCLOUD_HEADER = "x y z depth range_rate intensity class"


class CubeFormatError(ValueError):
    """Malformed, truncated or corrupted cube file."""


def cube_bytes(data: np.ndarray) -> bytes:
    data = np.asarray(data)
    if data.ndim != 3:
        raise ValueError("cube data must be 3-D")
    n = data.size
    payload = np.ascontiguousarray(data, dtype="<c8").tobytes()
    return _HEADER.pack(CUBE_MAGIC, CUBE_VERSION, *data.shape) + payload + _FOOTER.pack(n)


def write_cube(cube, path) -> None:
    data = cube.data if isinstance(cube, RadarCube) else cube
    Path(path).write_bytes(cube_bytes(data))


def read_cube_data(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + _FOOTER.size:
        raise CubeFormatError(f"{path}: file too short for a cube header")
    magic, version, n_ch, n_d, n_r = _HEADER.unpack_from(raw, 0)
    if magic != CUBE_MAGIC:
        raise CubeFormatError(f"{path}: bad magic {magic!r}")
    if version != CUBE_VERSION:
        raise CubeFormatError(f"{path}: unsupported version {version}")
    n = n_ch * n_d * n_r
    payload_len = len(raw) - _HEADER.size - _FOOTER.size
    if n * 8 != payload_len:
        raise CubeFormatError(
            f"{path}: dims {n_ch}x{n_d}x{n_r} need {n * 8} payload bytes, found {payload_len} (truncated?)")
    (count,) = _FOOTER.unpack_from(raw, len(raw) - _FOOTER.size)
    if count != n:
        raise CubeFormatError(f"{path}: integrity check failed, footer count {count} != {n}")
    data = np.frombuffer(raw, dtype="<c8", count=n, offset=_HEADER.size)
    return data.reshape(n_ch, n_d, n_r).astype(np.complex64)


def read_cube(path, cfg: WaveformConfig | None = None, array: ArrayConfig | None = None) -> RadarCube:
    """Load a cube. Without ``cfg``/``array``, the default waveform timing and a placeholder
    lambda/2 line array with the file's channel count are assumed."""
    data = read_cube_data(path)
    n_ch, n_d, n_r = data.shape
    if cfg is None:
        cfg = WaveformConfig(n_chirps=n_d, n_samples=n_r)
    if array is None:
        lam = cfg.wavelength
        array = default_array(lam) if n_ch == 12 else default_array(lam, n_tx=1, n_rx=n_ch)
    return RadarCube(data, cfg, array)


# --- maps -------------------------------------------------------------------

def map_to_pgm_values(values, floor_db: float) -> np.ndarray:
    """Linear map of dB-re-peak from [floor_db, 0] onto [0, 65535]."""
    if floor_db >= 0:
        raise ValueError("floor_db must be negative")
    db = to_db(values, floor_db)
    scaled = np.rint((db - floor_db) / (-floor_db) * PGM_MAX)
    return np.clip(scaled, 0, PGM_MAX).astype(np.uint16)


def pgm_bytes(pixels: np.ndarray) -> bytes:
    pixels = np.atleast_2d(np.asarray(pixels, dtype=np.uint16))
    h, w = pixels.shape
    return f"P5\n{w} {h}\n{PGM_MAX}\n".encode("ascii") + pixels.astype(">u2").tobytes()


def write_map_pgm(values, floor_db: float, path, sidecar: dict | None = None) -> dict:
    """Write a 16-bit PGM; returns the scaling record (and writes it as JSON
    next to the image when ``sidecar`` is given)."""
    values = np.atleast_2d(np.asarray(values))
    if not np.all(np.isfinite(values)):
        raise ValueError("map contains non-finite values")
    path = Path(path)
    path.write_bytes(pgm_bytes(map_to_pgm_values(values, floor_db)))
    peak = float(np.abs(values).max()) if values.size else 0.0
    info = {
        "width": int(values.shape[1]),
        "height": int(values.shape[0]),
        "floor_db": float(floor_db),
        "peak_db": float(20.0 * np.log10(peak)) if peak > 0 else None,
        "scale": "pixel = 65535 * (20log10(|x|/peak) - floor_db) / -floor_db",
    }
    if sidecar is not None:
        write_json({**sidecar, **info}, path.with_suffix(".json"))
    return info


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    pos += 1
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw, dtype=dtype, count=w * h, offset=pos).reshape(h, w)


def write_map_csv(values, path) -> None:
    values = np.atleast_2d(np.asarray(values))
    if not np.all(np.isfinite(values)):
        raise ValueError("map contains non-finite values")
    rows = (",".join(repr(float(x)) for x in row) for row in values)
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")


def read_map_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def write_pointcloud(points, path) -> None:
    """Space-separated text, one point per line, 9 significant digits."""
    lines = [POINTCLOUD_HEADER]
    for p, d, rr, i, c in zip(points.position, points.depth, points.range_rate,
                              points.intensity, points.class_id):
        lines.append(" ".join([f"{p[0]:.9g}", f"{p[1]:.9g}", f"{p[2]:.9g}",
                               f"{d:.9g}", f"{rr:.9g}", f"{i:.9g}", str(int(c))]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_pointcloud(path) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != POINTCLOUD_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = fh.read()
    if not rows.strip():
        return np.zeros((0, 7))
    return np.loadtxt(io.StringIO(rows), ndmin=2).reshape(-1, 7)


def write_lidar_maps(maps, path) -> None:
    """Populated pixels only, one row each: row,col,depth,doppler,semantic,intensity."""
    h, w = maps.depth.shape
    rows, cols = np.nonzero(maps.owner >= 0)
    lines = [f"# width={w} height={h}", "row,col,depth,doppler,semantic,intensity"]
    for r, c in zip(rows, cols):
        lines.append(f"{r},{c},{float(maps.depth[r, c])!r},{float(maps.doppler[r, c])!r},"
                     f"{int(maps.semantic[r, c])},{float(maps.intensity[r, c])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_lidar_maps(path) -> dict:
    with open(path, encoding="ascii") as fh:
        meta = dict(kv.split("=") for kv in fh.readline()[1:].split())
        fh.readline()
        rows = fh.read()
    table = (np.loadtxt(io.StringIO(rows), delimiter=",", ndmin=2).reshape(-1, 6)
             if rows.strip() else np.zeros((0, 6)))
    h, w = int(meta["height"]), int(meta["width"])
    out = {k: np.zeros((h, w)) for k in ("depth", "doppler", "semantic", "intensity")}
    r, c = table[:, 0].astype(int), table[:, 1].astype(int)
    for j, k in enumerate(("depth", "doppler", "semantic", "intensity")):
        out[k][r, c] = table[:, 2 + j]
    out["semantic"] = out["semantic"].astype(np.int64)
    return out


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
