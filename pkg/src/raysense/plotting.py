"""Matplotlib figures for range-Doppler, range-azimuth and lidar maps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .radar_dsp import to_db  # noqa: E402

# PNG metadata without version strings keeps figure bytes reproducible
_SAVE_KW = {"dpi": 110, "metadata": {"Software": None}}


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_range_doppler(magnitude, range_axis, rate_axis, path, floor_db: float = -60.0,
                       title: str = "Range-Doppler") -> None:
    """Range on the vertical axis, range rate (m/s, negative = closing) horizontal."""
    db = to_db(magnitude, floor_db)
    fig, ax = plt.subplots(figsize=(5, 5))
    im = ax.imshow(db.T, origin="lower", aspect="auto", cmap="viridis",
                   extent=[rate_axis[0], rate_axis[-1], range_axis[0], range_axis[-1]],
                   vmin=floor_db, vmax=0.0)
    ax.set_xlabel("range rate [m/s]")
    ax.set_ylabel("range [m]")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB re peak")
    _finish(fig, path)


def plot_range_azimuth(ra, angles_rad, range_axis, path, floor_db: float = -60.0,
                       title: str = "Range-azimuth", cartesian: bool = False) -> None:
    """Angle-range cut; ``cartesian`` draws it in the x/y ground plane instead."""
    db = to_db(ra, floor_db)
    fig, ax = plt.subplots(figsize=(5, 5))
    if cartesian:
        rr, aa = np.meshgrid(range_axis, angles_rad)
        im = ax.pcolormesh(-rr * np.sin(aa), rr * np.cos(aa), db, shading="auto",
                           cmap="viridis", vmin=floor_db, vmax=0.0)
        ax.set_xlabel("lateral (right) [m]")
        ax.set_ylabel("forward [m]")
        ax.set_aspect("equal")
    else:
        deg = np.degrees(angles_rad)
        im = ax.imshow(db.T, origin="lower", aspect="auto", cmap="viridis",
                       extent=[deg[0], deg[-1], range_axis[0], range_axis[-1]],
                       vmin=floor_db, vmax=0.0)
        ax.set_xlabel("azimuth [deg] (positive = left)")
        ax.set_ylabel("range [m]")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB re peak")
    _finish(fig, path)


def plot_lidar_maps(maps, path, max_range: float | None = None) -> None:
    fig, axes = plt.subplots(4, 1, figsize=(7, 7))
    depth = np.where(maps.depth > 0, maps.depth, np.nan)
    panels = [
        (depth, "depth [m]", "viridis", dict(vmin=0, vmax=max_range)),
        (np.where(maps.depth > 0, maps.doppler, np.nan), "range rate [m/s]", "coolwarm", {}),
        (maps.semantic, "class id", "tab20", {}),
        (np.where(maps.depth > 0, maps.intensity, np.nan), "intensity", "gray", {}),
    ]
    for ax, (img, label, cmap, kw) in zip(axes, panels):
        im = ax.imshow(img, cmap=cmap, interpolation="nearest", **kw)
        ax.set_title(label, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.025)
    _finish(fig, path)
