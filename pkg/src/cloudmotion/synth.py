"""Synthetic fleets for experiments where no traffic data is at hand.

Vehicles perform seeded random walks: constant per-vehicle speed, heading
diffusing a little every second, specular reflection at the area edges.
Crude as traffic, but it yields a mobile sensor network with realistic
churn in the spatial distribution.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .fleet import TrajectoryDataset
from .geometry import Rect


def random_walk_fleet(
    n_vehicles: int,
    bounds: Rect,
    duration_s: int,
    seed: int,
    speed_range: tuple = (4.0, 16.0),
    turn_sigma_deg: float = 20.0,
) -> TrajectoryDataset:
    """Seeded random-walk fleet with one record per vehicle per second."""
    if n_vehicles < 1 or duration_s < 1:
        raise ValueError("need at least one vehicle and one second")
    rng = np.random.default_rng(seed)
    width = max(len(str(n_vehicles - 1)), 3)
    ids = [f"v{i:0{width}d}" for i in range(n_vehicles)]

    x = rng.uniform(bounds.x0, bounds.x1, n_vehicles)
    y = rng.uniform(bounds.y0, bounds.y1, n_vehicles)
    heading = rng.uniform(0.0, 2.0 * np.pi, n_vehicles)
    speed = rng.uniform(speed_range[0], speed_range[1], n_vehicles)
    turn_sigma = np.deg2rad(turn_sigma_deg)

    records = []
    for t in range(duration_s + 1):
        for i in range(n_vehicles):
            records.append((ids[i], t, float(x[i]), float(y[i])))
        heading = heading + rng.normal(0.0, turn_sigma, n_vehicles)
        x = x + speed * np.sin(heading)
        y = y + speed * np.cos(heading)
        # Reflect at the edges; flip the matching heading component.
        for lo, hi, arr, flip in (
            (bounds.x0, bounds.x1, x, "x"),
            (bounds.y0, bounds.y1, y, "y"),
        ):
            low = arr < lo
            high = arr > hi
            arr[low] = 2 * lo - arr[low]
            arr[high] = 2 * hi - arr[high]
            bounced = low | high
            if flip == "x":
                heading[bounced] = -heading[bounced]
            else:
                heading[bounced] = np.pi - heading[bounced]
            # A huge step could still overshoot; clamp as a last resort.
            np.clip(arr, lo, hi, out=arr)

    records.sort(key=lambda r: (r[1], r[0]))
    return TrajectoryDataset(records=tuple(records), window=(0, duration_s), bounds=bounds)


def write_trajectories_csv(ds: TrajectoryDataset, path) -> None:
    """Write a dataset back to the t,vehicle_id,x,y interchange format."""
    lines = ["t,vehicle_id,x,y"]
    t0 = ds.window[0]
    for vid, t, x, y in ds.records:
        lines.append(f"{t + t0},{vid},{x:.3f},{y:.3f}")
    Path(path).write_text("\n".join(lines) + "\n")
