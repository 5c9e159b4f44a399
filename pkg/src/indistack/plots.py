"""Static SVG figures: value-function heatmaps and trajectory overlays.

SVG output is made reproducible by pinning matplotlib's hash salt and
dropping the date metadata; reruns with identical inputs produce identical
files up to matplotlib's own float formatting.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Rectangle

from .errors import ConfigurationError

matplotlib.rcParams["svg.hashsalt"] = "indistack"

_SVG_METADATA = {"Date": None}


def value_grid(net, xlim, ylim, grid: int, dims=(0, 1), fixed=None):
    """Raster of the value function over a 2-D slice of its input space.

    Returns (values, xs, ys) with values[i, j] = J at (xs[j], ys[i]).
    Coordinates not in `dims` are held at `fixed` (default zeros).
    """
    if grid < 2:
        raise ConfigurationError("grid must be >= 2")
    d0, d1 = dims
    if d0 == d1 or max(d0, d1) >= net.n:
        raise ConfigurationError(f"invalid slice dims {dims} for input dim {net.n}")
    xs = np.linspace(xlim[0], xlim[1], grid)
    ys = np.linspace(ylim[0], ylim[1], grid)
    base = np.zeros(net.n) if fixed is None else np.asarray(fixed, dtype=float)
    if base.shape != (net.n,):
        raise ConfigurationError(f"fixed values must have length {net.n}")
    XX, YY = np.meshgrid(xs, ys)
    states = np.tile(base, (grid * grid, 1))
    states[:, d0] = XX.ravel()
    states[:, d1] = YY.ravel()
    values = net.forward(states).reshape(grid, grid)
    return values, xs, ys


def _draw_regions(ax, regions):
    for region in regions:
        ax.add_patch(
            Rectangle(
                region.lo,
                region.hi[0] - region.lo[0],
                region.hi[1] - region.lo[1],
                facecolor="tab:blue",
                alpha=0.35,
                edgecolor="tab:blue",
            )
        )


def save_heatmap_svg(values, xs, ys, path, regions=(), title=None) -> None:
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(
        values,
        origin="lower",
        extent=(xs[0], xs[-1], ys[0], ys[-1]),
        aspect="auto",
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax)
    _draw_regions(ax, regions)
    if title:
        ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def save_trajectory_svg(X, regions, path, robot_dim: int = 2, title=None) -> None:
    """Overlay of robot paths (grey), start (green) and final (red) positions."""
    X = np.asarray(X, dtype=float)
    num_robots = X.shape[1] // robot_dim
    fig, ax = plt.subplots(figsize=(5, 5))
    _draw_regions(ax, regions)
    for r in range(num_robots):
        px = X[:, robot_dim * r]
        py = X[:, robot_dim * r + 1]
        ax.plot(px, py, color="0.6", linewidth=1.0)
        ax.plot(px[0], py[0], "o", color="tab:green", markersize=5)
        ax.plot(px[-1], py[-1], "o", color="tab:red", markersize=5)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
