"""Filled-contour rendering of exported density grids."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .gridfile import GridFormatError, load_grid, load_points

DPI = 150
N_LEVELS = 10


def contour_levels(density: np.ndarray, n_levels: int = N_LEVELS) -> np.ndarray:
    """Levels at quantiles of the positive density values so every mode gets
    contours regardless of absolute scale."""
    positive = density[density > 0]
    if positive.size == 0:
        return np.linspace(0.0, 1.0, n_levels)
    qs = np.linspace(0.05, 1.0, n_levels)
    levels = np.quantile(positive, qs)
    levels = np.unique(levels)
    if levels.size < 2:  # constant grid: synthesize a trivial band
        base = float(levels[0]) if levels.size else 0.0
        levels = np.array([base * 0.5, base * 1.5 + 1e-12])
    return levels


def plot_contours(grid_path, out_image_path, points_path=None) -> None:
    grid = load_grid(grid_path)
    density = grid.normalized_density

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.contourf(
        grid.xs,
        grid.ys,
        density.T,
        levels=contour_levels(density),
        cmap="viridis",
        extend="both",
    )
    if points_path is not None:
        pts = load_points(points_path)
        ax.plot(pts[:, 0], pts[:, 1], "k.", markersize=2, alpha=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out_image_path, dpi=DPI)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render a filled-contour image from a density grid CSV."
    )
    parser.add_argument("grid", help="path to grid.csv (with .meta.json sidecar)")
    parser.add_argument("out", help="output image path (PNG)")
    parser.add_argument(
        "--points", default=None, help="optional x,y CSV of points to overlay"
    )
    args = parser.parse_args(argv)
    try:
        plot_contours(args.grid, args.out, args.points)
    except (GridFormatError, OSError) as exc:
        print(f"bgm-plot-contours: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
