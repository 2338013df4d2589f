"""Parsing of density-grid artifacts.

A grid file is CSV with header x,y,log_unnorm_density (comment lines start
with #) and a <name>.meta.json sidecar carrying the quadrature log-normalizer
log_z, the bounds, and the resolution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER = "x,y,log_unnorm_density"


class GridFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GridFile:
    xs: np.ndarray        # sorted unique x centers
    ys: np.ndarray        # sorted unique y centers
    log_density: np.ndarray  # shape (len(xs), len(ys))
    log_z: float

    @property
    def normalized_density(self) -> np.ndarray:
        return np.exp(self.log_density - self.log_z)


def load_grid(path) -> GridFile:
    path = Path(path)
    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    if not lines or lines[0] != HEADER:
        raise GridFormatError(f"{path}: expected header {HEADER!r}")
    try:
        rows = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    except ValueError as exc:
        raise GridFormatError(f"{path}: {exc}") from exc
    if rows.shape[1] != 3:
        raise GridFormatError(f"{path}: expected 3 columns, got {rows.shape[1]}")

    xs = np.unique(rows[:, 0])
    ys = np.unique(rows[:, 1])
    if xs.size * ys.size != rows.shape[0]:
        raise GridFormatError(
            f"{path}: {rows.shape[0]} rows do not form a "
            f"{xs.size} x {ys.size} rectangular grid"
        )
    # rows are written x-major; rebuild the matrix positionally
    order = np.lexsort((rows[:, 1], rows[:, 0]))
    logd = rows[order, 2].reshape(xs.size, ys.size)

    meta_path = path.with_suffix(".meta.json")
    log_z = 0.0
    if meta_path.exists():
        log_z = float(json.loads(meta_path.read_text(encoding="utf-8"))["log_z"])
    return GridFile(xs=xs, ys=ys, log_density=logd, log_z=log_z)


def load_points(path) -> np.ndarray:
    """Optional overlay points: CSV rows of x,y (comments allowed)."""
    lines = [
        line
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    pts = np.loadtxt(lines, delimiter=",", ndmin=2)
    if pts.shape[1] != 2:
        raise GridFormatError(f"{path}: overlay points must have 2 columns")
    return pts
