"""Cloud-shadow transits over a mobile sensor network.

A clear-sky-index field sweeps the observation area at constant speed and
direction (degrees clockwise from north; 0 moves north, 90 east).  Each
sampling instant the field is read at the active vehicle positions with a
nearest-pixel lookup, producing the measurement stream the estimator sees.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .fleet import SensorSnapshot, ShadowMask, TrajectoryDataset, active_sensor_records
from .fractal_field import ClearSkyField
from .geometry import Rect

SPEED_MIN_MPS = 1.0
SPEED_MAX_MPS = 30.0


class FieldSizingError(ValueError):
    """A displaced lookup left the field raster: the field is too small."""


@dataclass(frozen=True)
class MotionTruth:
    """Ground-truth shadow motion: speed (m/s), direction (deg CW from north)."""

    speed: float
    direction_deg: float

    def __post_init__(self) -> None:
        if self.speed < 0:
            raise ValueError("speed must be non-negative")
        if not 0.0 <= self.direction_deg < 360.0:
            raise ValueError("direction must be in [0, 360)")

    @property
    def velocity(self) -> np.ndarray:
        """(vx, vy) in m/s; x east, y north."""
        theta = math.radians(self.direction_deg)
        return np.array([self.speed * math.sin(theta), self.speed * math.cos(theta)])


@dataclass(frozen=True)
class TransitConfig:
    duration_s: int = 300
    sampling_period_s: int = 1
    field_anchor: Optional[tuple] = None  # None: center the sweep on the area
    seed: int = 0

    def __post_init__(self) -> None:
        if self.duration_s <= 0 or self.sampling_period_s <= 0:
            raise ValueError("duration and sampling period must be positive")
        if self.duration_s % self.sampling_period_s != 0:
            raise ValueError("duration_s must be divisible by sampling_period_s")

    @property
    def sample_times(self) -> range:
        return range(0, self.duration_s + 1, self.sampling_period_s)


@dataclass(frozen=True)
class MeasurementSeries:
    """Snapshots at uniform spacing, first to last sampling instant inclusive."""

    snapshots: tuple
    truth: MotionTruth
    sampling_period_s: int

    def __post_init__(self) -> None:
        ts = [s.t for s in self.snapshots]
        if any(b - a != self.sampling_period_s for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshots must be uniformly spaced by the sampling period")


def draw_truth(rng_seed: int) -> MotionTruth:
    """Seeded uniform draw: speed on [1, 30] m/s, direction on [0, 360) deg."""
    rng = np.random.default_rng(rng_seed)
    speed = rng.uniform(SPEED_MIN_MPS, SPEED_MAX_MPS)
    direction = rng.uniform(0.0, 360.0)
    return MotionTruth(speed=float(speed), direction_deg=float(direction) % 360.0)


def default_field_anchor(
    field: ClearSkyField, bounds: Rect, truth: MotionTruth, duration_s: int
) -> tuple:
    """Anchor so the swept lookups stay centered in the field.

    The lookup point drifts by -t*v over the transit, so the field is
    centered on the observation area at mid-transit.  With that placement a
    field of extent duration*speed + bounds.diagonal is exactly sufficient.
    """
    cx, cy = bounds.center
    half = 0.5 * field.extent_m
    v = truth.velocity
    return (
        cx - half - 0.5 * duration_s * v[0],
        cy - half - 0.5 * duration_s * v[1],
    )


def sample_field_at(
    field: ClearSkyField,
    anchor: tuple,
    truth: MotionTruth,
    t: int,
    positions: Sequence,
    vehicle_ids: tuple = (),
) -> SensorSnapshot:
    """Read the moving field at sensor positions for one instant.

    The field translates with the truth velocity, so the value seen at world
    position p at time t sits at p - anchor - t*v in field coordinates;
    the containing pixel is the nearest-pixel lookup.  Lookups outside the
    raster mean the field was sized or anchored wrong: fail fast.
    """
    if not positions:
        return SensorSnapshot(t=t, sensors=(), vehicle_ids=vehicle_ids)
    pos = np.asarray(positions, dtype=np.float64)
    v = truth.velocity
    qx = pos[:, 0] - anchor[0] - t * v[0]
    qy = pos[:, 1] - anchor[1] - t * v[1]
    pix = field.pixel_size_m
    extent = field.extent_m
    if qx.min() < 0 or qy.min() < 0 or qx.max() > extent or qy.max() > extent:
        raise FieldSizingError(
            f"lookup left the field raster at t={t}; "
            f"extent {extent:.0f} m is too small for this transit"
        )
    ix = np.minimum((qx / pix).astype(np.int64), field.side_px - 1)
    iy = np.minimum((qy / pix).astype(np.int64), field.side_px - 1)
    kstar = field.kstar[iy, ix]
    sensors = tuple((float(p[0]), float(p[1]), float(k)) for p, k in zip(pos, kstar))
    return SensorSnapshot(t=t, sensors=sensors, vehicle_ids=vehicle_ids)


def run_transit(
    field: ClearSkyField,
    ds: TrajectoryDataset,
    mask: Optional[ShadowMask],
    truth: MotionTruth,
    cfg: TransitConfig,
) -> MeasurementSeries:
    """Sweep the field over the fleet and sample every sampling instant."""
    if ds.duration_s < cfg.duration_s:
        raise ValueError(
            f"dataset covers {ds.duration_s} s but the transit needs {cfg.duration_s} s"
        )
    anchor = cfg.field_anchor
    if anchor is None:
        anchor = default_field_anchor(field, ds.bounds, truth, cfg.duration_s)
    snaps = []
    for t in cfg.sample_times:
        recs = active_sensor_records(ds, mask, t)
        ids = tuple(r[0] for r in recs)
        positions = [(r[1], r[2]) for r in recs]
        snaps.append(sample_field_at(field, anchor, truth, t, positions, vehicle_ids=ids))
    return MeasurementSeries(
        snapshots=tuple(snaps), truth=truth, sampling_period_s=cfg.sampling_period_s
    )


def _central_mode(values: Sequence[float]) -> Optional[float]:
    """Most frequent value; ties go to the larger (clearer) one."""
    if not values:
        return None
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return max(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]


def is_valid_event(
    series: MeasurementSeries, bounds: Rect, min_variability_s: int = 60
) -> bool:
    """Did the central ninth of the area see enough irradiance variability?

    An instant qualifies when at least one sensor inside the central
    rectangle registers a change: its k* moved by more than 1e-6 since the
    same vehicle's sample one period earlier, or -- for vehicles without
    one -- differs by more than 1e-6 from the instant's modal central value.
    Qualifying instants need not be contiguous; the event is valid when they
    span more than min_variability_s, i.e. (count - 1) * period exceeds it.
    """
    if not series.snapshots:
        raise ValueError("empty measurement series")
    central = bounds.central_ninth()
    tol = 1e-6
    prev_kstar: dict[str, float] = {}
    qualifying = 0
    for snap in series.snapshots:
        in_central = [
            (vid, k)
            for vid, (x, y, k) in zip(snap.vehicle_ids, snap.sensors)
            if central.contains(x, y) and not (x == central.x1 or y == central.y1)
        ]
        mode = _central_mode([k for _, k in in_central])
        changed = False
        for vid, k in in_central:
            if vid in prev_kstar:
                if abs(k - prev_kstar[vid]) > tol:
                    changed = True
                    break
            elif mode is not None and abs(k - mode) > tol:
                changed = True
                break
        if changed:
            qualifying += 1
        prev_kstar = {vid: s[2] for vid, s in zip(snap.vehicle_ids, snap.sensors)}
    return (qualifying - 1) * series.sampling_period_s > min_variability_s


def export_series(series: MeasurementSeries, cfg: TransitConfig, path) -> None:
    """Interchange dump: one JSON header line, then t,x,y,kstar rows."""
    header = {
        "truth": {"speed_mps": series.truth.speed, "direction_deg": series.truth.direction_deg},
        "duration_s": cfg.duration_s,
        "sampling_period_s": cfg.sampling_period_s,
        "seed": cfg.seed,
    }
    lines = ["# " + json.dumps(header, sort_keys=True), "t,x,y,kstar"]
    for snap in series.snapshots:
        for x, y, k in snap.sensors:
            lines.append(f"{snap.t},{x:.3f},{y:.3f},{k:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")
