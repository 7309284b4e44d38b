"""Figure builders: trajectory overlay, RMSE heatmap, awareness sweep curve."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .readers import (
    SceneOutline,
    SchemaError,
    read_map,
    read_scene,
    read_sweep,
    read_track,
)

RMSE_COLOR_CAP = 1.0  # meters; cells above this saturate the colormap


def _draw_scene(ax, scene: SceneOutline):
    for (ax0, ay0), (bx, by) in scene.surfaces:
        ax.plot([ax0, bx], [ay0, by], color="0.45", linewidth=4, solid_capstyle="butt",
                zorder=1)
    ox, oy = scene.array_origin
    half = scene.array_span / 2
    ax.plot([ox - half, ox + half], [oy, oy], color="tab:red", linewidth=5, zorder=3)
    ax.annotate("array", (ox, oy), textcoords="offset points", xytext=(0, -14),
                ha="center", color="tab:red")


def plot_trajectory(csv_path, scenario_path, out_path) -> plt.Figure:
    """True versus estimated path over the surface layout.

    Steps where the tracker was blind (no predicted path anywhere) are drawn
    as open circles on the held estimate instead of the solid line.
    """
    data = read_track(csv_path)
    scene = read_scene(scenario_path)
    fig, ax = plt.subplots(figsize=(7, 6))
    _draw_scene(ax, scene)
    tx, ty = zip(*data.truth)
    ax.plot(tx, ty, color="tab:blue", linewidth=1.8, label="true path", zorder=4)
    est = np.array(data.estimate)
    blind = np.array(data.blind)
    ok = ~blind
    ax.plot(est[ok, 0], est[ok, 1], color="tab:orange", linestyle="--",
            linewidth=1.5, label="estimate", zorder=5)
    if blind.any():
        ax.plot(est[blind, 0], est[blind, 1], "o", markerfacecolor="none",
                markeredgecolor="tab:red", markersize=6, label="blind (held)",
                zorder=6)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(loc="upper right")
    mean_err = float(np.mean(data.error))
    ax.set_title(f"UE tracking, mean error {mean_err:.2f} m")
    _save(fig, out_path)
    return fig


def plot_rmse_map(csv_path, scenario_path, out_path) -> plt.Figure:
    """Spatial RMSE heatmap; non-trackable cells are masked grey."""
    data = read_map(csv_path)
    scene = read_scene(scenario_path)
    xs = sorted(set(data.x))
    ys = sorted(set(data.y))
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    grid = np.full((len(ys), len(xs)), np.nan)
    for x, y, r in zip(data.x, data.y, data.rmse):
        if r is not None:
            grid[yi[y], xi[x]] = r
    masked = np.ma.masked_invalid(grid)
    fig, ax = plt.subplots(figsize=(7, 6))
    cell_w = xs[1] - xs[0] if len(xs) > 1 else 1.0
    cell_h = ys[1] - ys[0] if len(ys) > 1 else 1.0
    extent = (min(xs) - cell_w / 2, max(xs) + cell_w / 2,
              min(ys) - cell_h / 2, max(ys) + cell_h / 2)
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("0.75")
    im = ax.imshow(masked, origin="lower", extent=extent, cmap=cmap,
                   vmin=0.0, vmax=RMSE_COLOR_CAP, aspect="equal")
    _draw_scene(ax, scene)
    fig.colorbar(im, ax=ax, label="RMSE [m]")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("Tracking RMSE over the trackable area")
    _save(fig, out_path)
    return fig


def plot_eta_curve(csv_path, out_path) -> plt.Figure:
    """RMSE versus environment-awareness level, one line per model."""
    data = read_sweep(csv_path)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    styles = {"nf": dict(color="tab:blue", marker="o"),
              "ff": dict(color="tab:orange", marker="s")}
    for model, pts in sorted(data.curves.items()):
        eta, rmse = zip(*pts)
        kw = styles.get(model, dict(marker="x"))
        ax.plot(eta, rmse, label=model.upper(), linewidth=1.8, **kw)
    ax.set_xlabel("environment-awareness level")
    ax.set_ylabel("RMSE [m]")
    ax.set_ylim(bottom=0.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    ax.set_title("Tracking RMSE versus awareness level")
    _save(fig, out_path)
    return fig


def _save(fig: plt.Figure, out_path) -> None:
    """Write both PNG and SVG next to each other."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    base = out.with_suffix("") if out.suffix.lower() in (".png", ".svg") else out
    fig.savefig(base.with_suffix(".png"), dpi=150, bbox_inches="tight")
    fig.savefig(base.with_suffix(".svg"), bbox_inches="tight")
