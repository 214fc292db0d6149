"""Vehicle fleets as mobile sensor networks.

Trajectories arrive as per-second (vehicle, position) records; penetration
subsampling keeps a seeded random subset of whole vehicles; a building
shadow mask removes vehicles standing on shadowed ground before they are
used as irradiance sensors.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import Rect
from .rasters import read_pgm, write_pgm


class TrajectoryParseError(ValueError):
    """Trajectory file violates the t,vehicle_id,x,y contract."""


class EmptyDatasetError(ValueError):
    """No records survived parsing and filtering."""


class MaskCoverageError(ValueError):
    """A queried position lies outside the shadow mask raster."""


@dataclass(frozen=True)
class SensorSnapshot:
    """Scattered clear-sky-index samples at one instant.

    sensors holds (x, y, kstar) triples; vehicle_ids is the parallel tuple of
    vehicle identifiers, kept so per-vehicle time differencing is possible
    downstream (the CSV interchange format carries positions only).
    """

    t: int
    sensors: tuple
    vehicle_ids: tuple = ()

    def __post_init__(self) -> None:
        if self.vehicle_ids and len(self.vehicle_ids) != len(self.sensors):
            raise ValueError("vehicle_ids must parallel sensors")


@dataclass(frozen=True)
class TrajectoryDataset:
    """Per-second vehicle positions over an observation window.

    records are (vehicle_id, t, x, y) with t in seconds from window start,
    sorted by (t, vehicle_id), at most one record per (vehicle_id, t).
    Immutable after construction; safe to share across parallel simulations.
    """

    records: tuple
    window: tuple
    bounds: Rect
    _by_t: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_t: dict[int, list] = {}
        length = self.window[1] - self.window[0]
        for vid, t, x, y in self.records:
            if not 0 <= t <= length:
                raise ValueError(f"record t={t} outside window of length {length}")
            by_t.setdefault(t, []).append((vid, x, y))
        object.__setattr__(self, "_by_t", by_t)

    @property
    def duration_s(self) -> int:
        return self.window[1] - self.window[0]

    def unique_ids(self) -> tuple:
        return tuple(sorted({r[0] for r in self.records}))

    def records_at(self, t: int) -> list:
        """(vehicle_id, x, y) of every vehicle with a record at t, id-sorted."""
        return self._by_t.get(t, [])


@dataclass(frozen=True)
class ShadowMask:
    """Boolean ground-shadow raster; True marks building-shadowed pixels.

    Pixel (iy, ix) covers [x0+ix*s, x0+(ix+1)*s) x [y0+iy*s, y0+(iy+1)*s);
    a point exactly on a pixel edge belongs to the higher-index pixel.
    """

    mask: np.ndarray
    origin: tuple
    pixel_size_m: float

    def is_shadowed(self, x: float, y: float) -> bool:
        ix = int(np.floor((x - self.origin[0]) / self.pixel_size_m))
        iy = int(np.floor((y - self.origin[1]) / self.pixel_size_m))
        ny, nx = self.mask.shape
        if not (0 <= ix < nx and 0 <= iy < ny):
            raise MaskCoverageError(f"position ({x:.1f}, {y:.1f}) outside mask raster")
        return bool(self.mask[iy, ix])

    def covers(self, bounds: Rect) -> bool:
        ny, nx = self.mask.shape
        return (
            self.origin[0] <= bounds.x0
            and self.origin[1] <= bounds.y0
            and self.origin[0] + nx * self.pixel_size_m >= bounds.x1
            and self.origin[1] + ny * self.pixel_size_m >= bounds.y1
        )


def load_trajectories(path, bounds: Rect, window: Optional[tuple] = None) -> TrajectoryDataset:
    """Parse a t,vehicle_id,x,y CSV into a dataset filtered to bounds/window.

    Record times are rebased to seconds from window start.  When window is
    None it spans the min..max time of the in-bounds records.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != "t,vehicle_id,x,y":
        raise TrajectoryParseError(f"{path}: expected header 't,vehicle_id,x,y'")

    raw = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TrajectoryParseError(f"{path}: line {lineno}: expected 4 fields")
        try:
            t, vid, x, y = int(parts[0]), parts[1].strip(), float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise TrajectoryParseError(f"{path}: line {lineno}: {exc}") from None
        if not vid:
            raise TrajectoryParseError(f"{path}: line {lineno}: empty vehicle_id")
        if bounds.contains(x, y):
            raw.append((vid, t, x, y))

    if window is None:
        if not raw:
            raise EmptyDatasetError(f"{path}: no records inside bounds")
        window = (min(r[1] for r in raw), max(r[1] for r in raw))

    t_start, t_end = window
    kept = []
    seen = set()
    for vid, t, x, y in raw:
        if not t_start <= t <= t_end:
            continue
        key = (vid, t)
        if key in seen:
            raise TrajectoryParseError(f"{path}: duplicate record for {key}")
        seen.add(key)
        kept.append((vid, t - t_start, x, y))
    if not kept:
        raise EmptyDatasetError(f"{path}: no records inside bounds and window")

    kept.sort(key=lambda r: (r[1], r[0]))
    return TrajectoryDataset(records=tuple(kept), window=window, bounds=bounds)


def subsample_by_penetration(ds: TrajectoryDataset, pr: float, seed: int) -> TrajectoryDataset:
    """Keep a seeded random share of whole vehicles.

    round(pr * n_ids) identifiers are taken as a prefix of one seeded
    shuffle of the sorted id list, so subsets are nested across rates:
    the 40 % fleet is contained in the 50 % fleet for the same seed.
    """
    if not 0.0 < pr <= 1.0:
        raise ValueError(f"penetration rate must be in (0, 1], got {pr}")
    if pr == 1.0:
        return ds
    ids = ds.unique_ids()
    k = int(np.floor(pr * len(ids) + 0.5))
    order = np.random.default_rng(seed).permutation(len(ids))
    chosen = {ids[i] for i in order[:k]}
    records = tuple(r for r in ds.records if r[0] in chosen)
    return TrajectoryDataset(records=records, window=ds.window, bounds=ds.bounds)


def active_sensor_records(
    ds: TrajectoryDataset, mask: Optional[ShadowMask], t: int
) -> list:
    """(vehicle_id, x, y) of sensing-capable vehicles at instant t.

    Vehicles on shadowed mask pixels are excluded; with no mask every
    vehicle with a record at t counts.
    """
    if not 0 <= t <= ds.duration_s:
        raise ValueError(f"t={t} outside dataset window")
    recs = ds.records_at(t)
    if mask is None:
        return list(recs)
    return [(vid, x, y) for vid, x, y in recs if not mask.is_shadowed(x, y)]


def active_sensors(ds: TrajectoryDataset, mask: Optional[ShadowMask], t: int) -> list:
    """Positions (x, y) of active sensors at instant t."""
    return [(x, y) for _, x, y in active_sensor_records(ds, mask, t)]


def median_active_count(
    ds: TrajectoryDataset, mask: Optional[ShadowMask] = None, times: Optional[Sequence[int]] = None
) -> int:
    """Median number of active sensors over the sampling instants."""
    if times is None:
        times = range(ds.duration_s + 1)
    counts = [len(active_sensor_records(ds, mask, t)) for t in times]
    return int(statistics.median_low(counts))


def load_shadow_mask(pgm_path, sidecar: Optional[str] = None) -> ShadowMask:
    """Read a shadow mask: PGM levels < 128 are shadowed, >= 128 lit.

    The sidecar (default: the .txt next to the PGM) holds one line
    'origin_x origin_y pixel_size'.
    """
    pgm_path = Path(pgm_path)
    levels = read_pgm(pgm_path)
    sidecar = Path(sidecar) if sidecar else pgm_path.with_suffix(".txt")
    parts = sidecar.read_text().split()
    if len(parts) != 3:
        raise ValueError(f"{sidecar}: expected 'origin_x origin_y pixel_size'")
    x0, y0, pix = (float(p) for p in parts)
    return ShadowMask(mask=levels < 128, origin=(x0, y0), pixel_size_m=pix)


def write_shadow_mask(mask: ShadowMask, pgm_path) -> None:
    levels = np.where(mask.mask, 0, 255).astype(np.uint8)
    write_pgm(pgm_path, levels)
    Path(pgm_path).with_suffix(".txt").write_text(
        f"{mask.origin[0]:g} {mask.origin[1]:g} {mask.pixel_size_m:g}\n"
    )
