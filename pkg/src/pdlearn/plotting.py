"""Figures for diagrams, dual diagrams and birth/death positions.

All functions draw on the Agg backend and write straight to a file.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib import rcParams  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

rcParams.update({
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "savefig.bbox": "tight",
})

POS_COLOR = "tab:red"
NEG_COLOR = "tab:blue"


def new(width=4.0, height=None, nrows=1, ncols=1):
    height = height if height is not None else width * 0.9
    fig, ax = plt.subplots(nrows=nrows, ncols=ncols, figsize=(width, height))
    return fig, ax


def save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def _extent(params):
    return (params.b_min, params.b_max, params.d_min, params.d_max)


def plot_dual_diagram(dd, path, title=None, region=None):
    """Heatmap on a diverging scale centred at zero (red > 0, blue < 0)."""
    fig, ax = new()
    vmax = float(np.abs(dd.grid).max()) or 1.0
    im = ax.imshow(dd.grid.T, origin="lower", extent=_extent(dd.params), cmap="RdBu_r",
                   vmin=-vmax, vmax=vmax, aspect="auto", interpolation="nearest")
    lo = max(dd.params.b_min, dd.params.d_min)
    hi = min(dd.params.b_max, dd.params.d_max)
    if lo < hi:
        ax.plot([lo, hi], [lo, hi], color="0.4", lw=0.7)
    if region is not None:
        db, dw = dd.params.cell_width
        for cells, color in ((region.positive_cells, POS_COLOR), (region.negative_cells, NEG_COLOR)):
            for i, j in cells:
                b0, _, d0, _ = dd.params.cell_bounds(i, j)
                ax.add_patch(Rectangle((b0, d0), db, dw, fill=False, ec=color, lw=0.6))
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    if title:
        ax.set_title(title)
    save(fig, path)


def plot_region(region, dd, path, title=None):
    """Thresholded dual diagram: +1 / -1 on selected cells, 0 elsewhere."""
    grid = np.zeros_like(dd.grid)
    for i, j in region.positive_cells:
        grid[i, j] = 1.0
    for i, j in region.negative_cells:
        grid[i, j] = -1.0
    fig, ax = new()
    ax.imshow(grid.T, origin="lower", extent=_extent(dd.params), cmap="RdBu_r", vmin=-1, vmax=1,
              aspect="auto", interpolation="nearest")
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    ax.set_title(title or f"|value| >= {region.threshold:.3g}")
    save(fig, path)


def plot_diagram(dg, degree, path, title=None, params=None):
    arr = dg.array(degree)
    arr = arr[np.isfinite(arr[:, 1])] if len(arr) else arr
    fig, ax = new()
    if len(arr):
        ax.scatter(arr[:, 0], arr[:, 1], s=6, c="k")
        lo, hi = float(arr.min()), float(arr.max())
    else:
        lo, hi = 0.0, 1.0
    if params is not None:
        lo, hi = min(params.b_min, params.d_min), max(params.b_max, params.d_max)
    ax.plot([lo, hi], [lo, hi], color="0.4", lw=0.7)
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    ax.set_title(title or f"degree {degree}")
    save(fig, path)


def plot_positions(path, positive, negative, image=None, points=None, which="birth", title=None):
    """Birth (points) or death (triangles / pixels) positions over the input."""
    fig, ax = new()
    if image is not None:
        h, w = image.pixels.shape
        ax.imshow(image.pixels, cmap="gray", extent=(0, w, h, 0), interpolation="nearest")
    if points is not None and len(points):
        ax.scatter(points.points[:, 0], points.points[:, 1], s=8, c="k")
        ax.set_aspect("equal")
    for pairs, color in ((negative, NEG_COLOR), (positive, POS_COLOR)):
        for p in pairs:
            pos = p.birth_pos if which == "birth" else p.death_pos
            if not pos:
                continue
            if len(pos) >= 3:
                poly = np.array(pos + (pos[0],))
                ax.fill(poly[:, 0], poly[:, 1], color=color, alpha=0.5)
            else:
                c = np.mean(np.array(pos), axis=0)
                ax.plot(c[0], c[1], "s" if image is not None else "o", ms=3, color=color)
    if title:
        ax.set_title(title)
    save(fig, path)


def plot_image(img, path, title=None):
    fig, ax = new()
    ax.imshow(img.pixels, cmap="gray", interpolation="nearest")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    save(fig, path)


def plot_point_cloud(pc, path, title=None):
    fig, ax = new()
    if len(pc):
        ax.scatter(pc.points[:, 0], pc.points[:, 1], s=8, c="k")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    save(fig, path)
