"""Command-line entry point: ``raysense params | simulate | render``.

Exit codes: 0 success, 1 runtime failure, 2 usage or scenario parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import io as rio
from .lidar_sim import LidarConfig, scan
from .radar_dsp import process_cube
from .radar_model import ArrayConfig, WaveformConfig, derived_params, hits_to_targets, virtual_array
from .radar_synth import synthesize_cube
from .raycast import cast_grid
from .rng import derive_seed
from .scenario import RadarSetup, Scenario, ScenarioError, load_scenario
from .scene import rig_mount_poses

log = logging.getLogger("raysense")

ARTIFACTS = ("cube.bin", "rd_map.pgm", "rd_map.csv", "ra_map.pgm", "ra_map.csv",
             "lidar_maps.csv", "pointcloud.txt", "meta.json")
ENV_THREADS = "RAYSENSE_THREADS"


class UsageError(Exception):
    pass


def azimuth_resolution(array: ArrayConfig, wavelength: float) -> float:
    """Rayleigh-style resolution lambda / (N * d) of the virtual array along y, rad."""
    y = np.unique(np.round(virtual_array(array)[:, 1], 12))
    if len(y) < 2:
        return float("nan")
    d = np.min(np.diff(y))
    n = int(round((y[-1] - y[0]) / d)) + 1
    return wavelength / (n * d)


def params_table(setup: RadarSetup) -> list[tuple[str, str]]:
    wf, arr = setup.waveform, setup.array
    p = derived_params(wf)
    n = arr.gain_exponent
    hpbw = np.degrees(np.arccos(0.5 ** (1.0 / n))) if n > 0 else 90.0
    return [
        ("Carrier frequency f0", f"{wf.f0 / 1e9:.6g} GHz"),
        ("Bandwidth B", f"{wf.bandwidth / 1e6:.6g} MHz"),
        ("Chirp time T_c", f"{wf.chirp_time * 1e6:.6g} us"),
        ("Inter-chirp time T_i", f"{wf.inter_chirp_time * 1e6:.6g} us"),
        ("Chirps per frame N_d", f"{wf.n_chirps}"),
        ("Samples per chirp N_r", f"{wf.n_samples}"),
        ("Range resolution", f"{p.range_res:.5f} m"),
        ("Max range", f"{p.max_range:.1f} m"),
        ("Velocity resolution", f"{p.vel_res:.4f} m/s"),
        ("Max unambiguous velocity", f"{p.vel_max:.2f} m/s"),
        ("Sample rate fs", f"{p.fs / 1e6:.4f} MHz"),
        ("Chirp slope k", f"{p.k:.4g} Hz/s"),
        ("Wavelength", f"{p.wavelength * 1e3:.4f} mm"),
        ("Virtual channels N_MIMO", f"{arr.n_channels}"),
        ("Azimuth resolution", f"{np.degrees(azimuth_resolution(arr, p.wavelength)):.3f} deg"),
        ("Azimuth FoV (HPBW)", f"+/-{hpbw:.0f} deg"),
    ]


def _require_radar(sc: Scenario, path) -> RadarSetup:
    if sc.radar is None:
        raise ScenarioError(f"{path}: missing key 'radar'")
    return sc.radar


def cmd_params(args) -> int:
    sc = load_scenario(args.scenario)
    setup = _require_radar(sc, args.scenario)
    rows = params_table(setup)
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    return 0


def _parse_range(text: str | None, n: int) -> list[int]:
    if text is None:
        return list(range(n))
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"--frames: expected a..b, got {text!r}") from None
    if not (0 <= lo <= hi < n):
        raise UsageError(f"--frames {text}: scenario has frames 0..{n - 1}")
    return list(range(lo, hi + 1))


def _parse_sensors(text: str | None, n: int) -> list[int]:
    if text is None:
        return list(range(n))
    try:
        idx = sorted({int(s) for s in text.split(",") if s.strip()})
    except ValueError:
        raise UsageError(f"--sensors: expected comma-separated indices, got {text!r}") from None
    if not idx or idx[0] < 0 or idx[-1] >= n:
        raise UsageError(f"--sensors {text}: rig has mounts 0..{n - 1}")
    return idx


def _parse_rays(text: str | None):
    if text is None:
        return None
    try:
        a, b = text.lower().split("x")
        n_az, n_el = int(a), int(b)
    except ValueError:
        raise UsageError(f"--rays: expected NxM, got {text!r}") from None
    if n_az < 1 or n_el < 1:
        raise UsageError("--rays counts must be >= 1")
    return n_az, n_el


def worker_count(requested: int | None) -> int:
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get(ENV_THREADS)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def radar_meta(setup: RadarSetup) -> dict:
    wf = setup.waveform
    return {
        "waveform": asdict(wf),
        "tx_positions_m": setup.array.tx_positions.tolist(),
        "rx_positions_m": setup.array.rx_positions.tolist(),
        "gain_exponent": setup.array.gain_exponent,
    }


def radar_from_meta(meta: dict) -> tuple[WaveformConfig, ArrayConfig]:
    r = meta["radar"]
    return (WaveformConfig(**r["waveform"]),
            ArrayConfig(np.array(r["tx_positions_m"]), np.array(r["rx_positions_m"]), r["gain_exponent"]))


def _map_axes(products) -> dict:
    rd = products.rd_magnitude
    return {
        "rd_map": {"rows": "range rate (ascending)", "cols": "range",
                   "range_bin_m": float(rd.range_axis[1] - rd.range_axis[0]),
                   "rate_bin_mps": float(rd.rate_axis[1] - rd.rate_axis[0]),
                   "rate_first_mps": float(rd.rate_axis[0]),
                   "zero_rate_row": int(np.argmin(np.abs(rd.rate_axis)))},
        "ra_map": {"rows": "azimuth (ascending, positive = left)", "cols": "range",
                   "angles_deg": [float(a) for a in np.degrees(products.ra_angles)],
                   "range_bin_m": float(rd.range_axis[1] - rd.range_axis[0])},
    }


def write_radar_maps(products, out_dir: Path, floor_db: float) -> dict:
    """RD/RA PGM + CSV pairs; returns the scaling/axis metadata."""
    axes = _map_axes(products)
    axes["rd_map"]["pgm"] = rio.write_map_pgm(products.rd_magnitude.data, floor_db, out_dir / "rd_map.pgm")
    rio.write_map_csv(products.rd_magnitude.data, out_dir / "rd_map.csv")
    axes["ra_map"]["pgm"] = rio.write_map_pgm(products.ra, floor_db, out_dir / "ra_map.pgm")
    rio.write_map_csv(products.ra, out_dir / "ra_map.csv")
    return axes


def simulate_sensor(sc: Scenario, setup: RadarSetup, lidar_cfg: LidarConfig, frame_idx: int,
                    sensor_idx: int, seed: int, out_dir: Path, window_kind: str, floor_db: float,
                    figures: bool = False) -> dict:
    frame = sc.frames[frame_idx]
    pose = rig_mount_poses(sc.rig, frame.ego_pose)[sensor_idx]
    vel = frame.ego_velocity
    sub_seed = derive_seed(seed, frame_idx, sensor_idx)
    out_dir.mkdir(parents=True, exist_ok=True)

    hits = cast_grid(frame, pose, vel, setup.grid)
    targets = hits_to_targets(hits)
    cube = synthesize_cube(targets, setup.waveform, setup.array, sub_seed)
    rio.write_cube(cube, out_dir / "cube.bin")
    products = process_cube(cube, window_kind)
    maps_meta = write_radar_maps(products, out_dir, floor_db)

    lf = scan(frame, pose, vel, lidar_cfg, sub_seed)
    rio.write_lidar_maps(lf.maps, out_dir / "lidar_maps.csv")
    rio.write_pointcloud(lf.points, out_dir / "pointcloud.txt")

    meta = {
        "frame": frame_idx,
        "sensor": sensor_idx,
        "suite": sc.rig.mounts[sensor_idx].suite,
        "timestamp_s": float(frame.timestamp),
        "seed": sub_seed,
        "window": window_kind,
        "sensor_pose": {"position": pose.position.tolist(), "rotation": pose.rotation.tolist()},
        "radar": radar_meta(setup),
        "maps": maps_meta,
        "lidar": {"intrinsics": lidar_cfg.intrinsics.tolist(), "width": lidar_cfg.width,
                  "height": lidar_cfg.height, "max_range_m": lidar_cfg.max_range},
        "counts": {"radar_hits": len(hits), "radar_targets": len(targets), "lidar_points": len(lf.points)},
    }
    rio.write_json(meta, out_dir / "meta.json")

    if figures:
        from .plotting import plot_lidar_maps, plot_range_azimuth, plot_range_doppler

        rd = products.rd_magnitude
        plot_range_doppler(rd.data, rd.range_axis, rd.rate_axis, out_dir / "rd_map.png", floor_db,
                           title=f"frame {frame_idx} sensor {sensor_idx}  t={frame.timestamp:.3f}s")
        plot_range_azimuth(products.ra, products.ra_angles, rd.range_axis, out_dir / "ra_map.png", floor_db)
        plot_lidar_maps(lf.maps, out_dir / "lidar_maps.png", lidar_cfg.max_range)
    return meta


def run_simulation(scenario_path, out_dir, seed: int | None = None, frames: str | None = None,
                   sensors: str | None = None, rays: str | None = None, workers: int | None = None,
                   window_kind: str = "hann", floor_db: float = -60.0, figures: bool = False) -> dict:
    """Simulate every selected (frame, sensor) pair and write the output tree + manifest."""
    sc = load_scenario(scenario_path)
    setup = _require_radar(sc, scenario_path)
    frame_ids = _parse_range(frames, len(sc.frames))
    sensor_ids = _parse_sensors(sensors, len(sc.rig.mounts))
    ray_counts = _parse_rays(rays)
    if ray_counts:
        setup = replace(setup, grid=replace(setup.grid, n_az=ray_counts[0], n_el=ray_counts[1]))
    lidar_cfg = sc.lidar or LidarConfig()
    seed = sc.seed if seed is None else seed
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_workers = worker_count(workers)

    created = []
    for f in frame_ids:
        d = out_dir / f"frame_{f}"
        if not d.exists():
            created.append(d)

    def job(fs):
        f, s = fs
        t0 = time.perf_counter()
        try:
            simulate_sensor(sc, setup, lidar_cfg, f, s, seed, out_dir / f"frame_{f}" / f"sensor_{s}",
                            window_kind, floor_db, figures)
        except Exception as exc:
            raise RuntimeError(f"frame {f} sensor {s}: {exc}") from exc
        return time.perf_counter() - t0

    jobs = [(f, s) for f in frame_ids for s in sensor_ids]
    t_start = time.perf_counter()
    try:
        if n_workers > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                durations = list(pool.map(job, jobs))
        else:
            durations = [job(j) for j in jobs]
    except Exception:
        for d in created:
            shutil.rmtree(d, ignore_errors=True)
        raise

    entries = []
    names = list(ARTIFACTS) + (["rd_map.png", "ra_map.png", "lidar_maps.png"] if figures else [])
    for f, s in jobs:
        rel = Path(f"frame_{f}") / f"sensor_{s}"
        entries.append({"frame": f, "sensor": s, "timestamp_s": float(sc.frames[f].timestamp),
                        "files": [str(rel / n) for n in names]})
    manifest = {
        "scenario": Path(scenario_path).name,
        "output_dir": ".",
        "seed": seed,
        "frames": frame_ids,
        "sensors": sensor_ids,
        "rays": [setup.grid.n_az, setup.grid.n_el],
        "window": window_kind,
        "floor_db": floor_db,
        "artifacts": entries,
    }
    for e in entries:
        for name in e["files"]:
            if not (out_dir / name).exists():
                raise RuntimeError(f"missing output {name}")
    rio.write_json(manifest, out_dir / "manifest.json")
    elapsed = time.perf_counter() - t_start
    log.info("simulated %d frame-sensor pairs in %.2f s (%d workers; per job max %.2f s)",
             len(jobs), elapsed, n_workers, max(durations) if durations else 0.0)
    return manifest


def cmd_simulate(args) -> int:
    manifest = run_simulation(args.scenario, args.out_dir, args.seed, args.frames, args.sensors,
                              args.rays, args.workers, args.window, args.floor_db, args.figures)
    print(f"wrote {sum(len(e['files']) for e in manifest['artifacts'])} files + manifest to {args.out_dir}")
    return 0


def render(cube_path, kind: str, out_path, window_kind: str = "hann", floor_db: float = -60.0,
           meta_path=None, scenario_path=None, figure: bool = False) -> list[Path]:
    """Recompute a map from a stored cube; writes <out>.pgm, <out>.csv and <out>.json."""
    cube_path = Path(cube_path)
    if scenario_path is not None:
        setup = _require_radar(load_scenario(scenario_path), scenario_path)
        wf, arr = setup.waveform, setup.array
    else:
        meta_path = Path(meta_path) if meta_path else cube_path.with_name("meta.json")
        if not meta_path.exists():
            raise UsageError(f"no radar metadata at {meta_path}; pass --meta or --scenario")
        wf, arr = radar_from_meta(json.loads(meta_path.read_text()))
    cube = rio.read_cube(cube_path, wf, arr)
    products = process_cube(cube, window_kind)
    out = Path(out_path)
    if out.suffix in (".pgm", ".csv", ".png", ".json"):
        out = out.with_suffix("")
    out.parent.mkdir(parents=True, exist_ok=True)
    axes = _map_axes(products)
    key = "rd_map" if kind == "rd" else "ra_map"
    values = products.rd_magnitude.data if kind == "rd" else products.ra
    pgm = out.with_name(out.name + ".pgm")
    csv = out.with_name(out.name + ".csv")
    rio.write_map_pgm(values, floor_db, pgm, sidecar={**axes[key], "window": window_kind, "source": cube_path.name})
    rio.write_map_csv(values, csv)
    written = [pgm, csv, out.with_name(out.name + ".json")]
    if figure:
        from .plotting import plot_range_azimuth, plot_range_doppler

        png = out.with_name(out.name + ".png")
        rd = products.rd_magnitude
        if kind == "rd":
            plot_range_doppler(rd.data, rd.range_axis, rd.rate_axis, png, floor_db)
        else:
            plot_range_azimuth(products.ra, products.ra_angles, rd.range_axis, png, floor_db)
        written.append(png)
    return written


def cmd_render(args) -> int:
    written = render(args.cube, args.kind, args.out, args.window, args.floor_db, args.meta,
                     args.scenario, args.figure)
    for p in written:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raysense", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="print waveform and derived radar parameters")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_params)

    s = sub.add_parser("simulate", help="simulate radar + lidar outputs for a scenario")
    s.add_argument("scenario")
    s.add_argument("out_dir")
    s.add_argument("--seed", type=int, default=None, help="override meta.seed")
    s.add_argument("--frames", default=None, help="frame index range a..b (inclusive)")
    s.add_argument("--sensors", default=None, help="comma-separated mount indices")
    s.add_argument("--rays", default=None, help="radar ray grid NxM (azimuth x elevation)")
    s.add_argument("--workers", type=int, default=None, help=f"worker threads (capped by {ENV_THREADS})")
    s.add_argument("--window", choices=("hann", "rectangular"), default="hann")
    s.add_argument("--floor-db", type=float, default=-60.0)
    s.add_argument("--figures", action="store_true", help="also render PNG figures")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("render", help="recompute RD or RA maps from a stored cube")
    r.add_argument("cube")
    r.add_argument("kind", choices=("rd", "ra"))
    r.add_argument("out")
    r.add_argument("--window", choices=("hann", "rectangular"), default="hann")
    r.add_argument("--floor-db", type=float, default=-60.0)
    r.add_argument("--meta", default=None, help="meta.json with radar config (default: next to cube)")
    r.add_argument("--scenario", default=None, help="take the radar config from a scenario file")
    r.add_argument("--figure", action="store_true", help="also render a PNG figure")
    r.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if args.command in ("params", "simulate") else 1
    except (rio.CubeFormatError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
