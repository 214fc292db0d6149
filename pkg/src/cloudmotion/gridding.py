"""Scattered sensor samples onto a fixed virtual grid by inverse distance.

Each grid point takes the inverse-distance-weighted mean of its k nearest
sensors (w = 1/d); a sensor sitting exactly on a grid point wins outright.
Snapshots with fewer than k sensors are marked invalid instead of being
interpolated from a thinner neighborhood.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fleet import SensorSnapshot
from .geometry import Rect
from .transit import MeasurementSeries

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None


if njit is not None:

    @njit(cache=True)
    def _idw_values(gx, gy, sx, sy, sz, k):
        """Exact k-nearest IDW per grid point via insertion selection.

        Strict-less comparisons keep the earliest candidate on distance
        ties, which matches the canonical (x, y) sensor ordering used by
        the caller.  Slot 0 after the scan is the overall nearest, so an
        exact coincidence (d2 == 0) short-circuits to that sensor's value.
        """
        n_grid = gx.shape[0]
        n_sens = sx.shape[0]
        values = np.empty(n_grid)
        best_d2 = np.empty(k)
        best_j = np.empty(k, dtype=np.int64)
        for g in range(n_grid):
            count = 0
            for j in range(n_sens):
                ddx = gx[g] - sx[j]
                ddy = gy[g] - sy[j]
                d2 = ddx * ddx + ddy * ddy
                if count < k:
                    pos = count
                    count += 1
                elif d2 < best_d2[k - 1]:
                    pos = k - 1
                else:
                    continue
                while pos > 0 and best_d2[pos - 1] > d2:
                    best_d2[pos] = best_d2[pos - 1]
                    best_j[pos] = best_j[pos - 1]
                    pos -= 1
                best_d2[pos] = d2
                best_j[pos] = j
            if best_d2[0] == 0.0:
                values[g] = sz[best_j[0]]
            else:
                wsum = 0.0
                vsum = 0.0
                for m in range(k):
                    w = 1.0 / np.sqrt(best_d2[m])
                    wsum += w
                    vsum += w * sz[best_j[m]]
                values[g] = vsum / wsum
        return values

else:  # pragma: no cover
    _idw_values = None


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned grid anchored at the lower-left corner of bounds.

    Points sit at bounds lower-left + (ix, iy) * dmin; the grid has
    floor(side/dmin) + 1 points per axis, so it never overruns bounds.
    """

    bounds: Rect
    dmin: float

    def __post_init__(self) -> None:
        if self.dmin <= 0:
            raise ValueError("dmin must be positive")

    @property
    def nx(self) -> int:
        return int(math.floor(self.bounds.width / self.dmin + 1e-9)) + 1

    @property
    def ny(self) -> int:
        return int(math.floor(self.bounds.height / self.dmin + 1e-9)) + 1

    def points(self) -> tuple:
        """Flattened grid coordinates (gx, gy), row-major over (iy, ix)."""
        xs = self.bounds.x0 + np.arange(self.nx) * self.dmin
        ys = self.bounds.y0 + np.arange(self.ny) * self.dmin
        gx, gy = np.meshgrid(xs, ys)
        return gx.ravel(), gy.ravel()


@dataclass(frozen=True)
class GridSnapshot:
    """IDW-gridded counterpart of one SensorSnapshot; (ny, nx) values."""

    t: int
    values: np.ndarray
    valid: bool


def idw_interpolate(snapshot: SensorSnapshot, spec: GridSpec, k_neighbors: int = 3) -> GridSnapshot:
    """Interpolate one snapshot onto the grid.

    Neighbor selection is exact; distance ties at the k-th slot are broken
    by sensor (x, y) and then input order, so the result does not depend on
    how the sensor list happened to be ordered.
    """
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")
    n_sensors = len(snapshot.sensors)
    ny, nx = spec.ny, spec.nx
    if n_sensors < k_neighbors:
        return GridSnapshot(t=snapshot.t, values=np.full((ny, nx), np.nan), valid=False)

    arr = np.asarray(snapshot.sensors, dtype=np.float64)
    order = np.lexsort((arr[:, 1], arr[:, 0]))  # canonical: by x, then y
    sx, sy, sz = arr[order, 0], arr[order, 1], arr[order, 2]

    gx, gy = spec.points()
    if _idw_values is not None:
        values = _idw_values(gx, gy, sx, sy, sz, k_neighbors)
        return GridSnapshot(t=snapshot.t, values=values.reshape(ny, nx), valid=True)

    d2 = (gx[:, None] - sx[None, :]) ** 2 + (gy[:, None] - sy[None, :]) ** 2

    k = k_neighbors
    if n_sensors == k:
        sel = np.broadcast_to(np.arange(k), (d2.shape[0], k))
    else:
        # Partition at k so slot k holds the (k+1)-th smallest distance; a
        # tie straddles the boundary exactly when it equals the k-th.  Those
        # rows are redone with a stable sort so the canonical order decides.
        part = np.argpartition(d2, k, axis=1)[:, : k + 1]
        dpart = np.take_along_axis(d2, part, axis=1)
        sel = part[:, :k]
        tie_rows = np.nonzero(dpart[:, :k].max(axis=1) == dpart[:, k])[0]
        if tie_rows.size:
            sel = sel.copy()
            for r in tie_rows:
                sel[r] = np.argsort(d2[r], kind="stable")[:k]

    dsel = np.sqrt(np.take_along_axis(d2, sel, axis=1))
    values = np.empty(d2.shape[0])
    coincident = dsel.min(axis=1) <= 0.0
    regular = ~coincident
    if np.any(regular):
        w = 1.0 / dsel[regular]
        z = sz[sel[regular]]
        values[regular] = (w * z).sum(axis=1) / w.sum(axis=1)
    for r in np.nonzero(coincident)[0]:
        values[r] = sz[np.argmax(d2[r] == 0.0)]

    return GridSnapshot(t=snapshot.t, values=values.reshape(ny, nx), valid=True)


def grid_series(series: MeasurementSeries, spec: GridSpec, k_neighbors: int = 3) -> list:
    """One GridSnapshot per snapshot, invalid ones kept in place."""
    return [idw_interpolate(s, spec, k_neighbors) for s in series.snapshots]


def grid_to_csv(snapshot: GridSnapshot, path) -> None:
    """Debug dump: row,col,kstar lines."""
    lines = ["row,col,kstar"]
    ny, nx = snapshot.values.shape
    for iy in range(ny):
        for ix in range(nx):
            lines.append(f"{iy},{ix},{snapshot.values[iy, ix]:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")
