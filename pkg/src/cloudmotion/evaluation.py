"""Monte Carlo campaigns: seeded truth draws, parameter sweeps, RMSE tables.

Every simulation index draws its own (speed, direction) truth from
base_seed + index, shared across all (dmin, timestep, pr) cells, so sweep
cells are event-matched.  RMSEs aggregate valid events only; scatter rows
keep every simulation because a single outlier can dominate the RMSE.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .cmae import InsufficientPairsError, accumulate_cmae, estimate_cmv, invalid_estimate
from .fleet import ShadowMask, TrajectoryDataset, subsample_by_penetration
from .fractal_field import ClearSkyField
from .geometry import Rect
from .gridding import GridSpec, grid_series
from .transit import SPEED_MAX_MPS, MeasurementSeries, TransitConfig, draw_truth, is_valid_event, run_transit


class UndefinedStatisticError(ValueError):
    """Statistic requested over an empty sample."""


def rmse(errors) -> float:
    """Root of the mean squared error."""
    arr = np.asarray(errors, dtype=np.float64)
    if arr.size == 0:
        raise UndefinedStatisticError("RMSE of an empty error sample is undefined")
    return float(np.sqrt(np.mean(arr * arr)))


def direction_error(truth_deg: float, est_deg: float) -> float:
    """Minimal signed angular difference est - truth, wrapped to (-180, 180]."""
    d = (est_deg - truth_deg + 180.0) % 360.0 - 180.0
    return 180.0 if d == -180.0 else d


@dataclass(frozen=True)
class CampaignConfig:
    """One campaign: a scenario, a field, parameter sweeps, seeded draws."""

    field: ClearSkyField
    dataset: TrajectoryDataset
    bounds: Rect
    mask: Optional[ShadowMask] = None
    n_simulations: int = 100
    dmin_list: tuple = (10.0,)
    timestep_list: tuple = (10,)
    pr_list: tuple = (1.0,)
    base_seed: int = 0
    sampling_period_s: int = 1
    duration_s: int = 300
    k_neighbors: int = 3
    v_cap: float = 40.0
    min_variability_s: int = 60

    def __post_init__(self) -> None:
        if self.n_simulations < 1:
            raise ValueError("n_simulations must be >= 1")
        shorter = min(self.bounds.width, self.bounds.height)
        limit = shorter / SPEED_MAX_MPS
        for ts in self.timestep_list:
            if ts > limit:
                raise ValueError(
                    f"timestep {ts} s exceeds the shorter-side limit {limit:.1f} s"
                )
            if ts % self.sampling_period_s != 0:
                raise ValueError("timesteps must be multiples of the sampling period")
        if self.duration_s % self.sampling_period_s != 0:
            raise ValueError("duration must be a multiple of the sampling period")
        if self.mask is not None and not self.mask.covers(self.bounds):
            raise ValueError("shadow mask does not cover the observation bounds")


@dataclass(frozen=True)
class TransitOutcome:
    """One simulation in one penetration cell, before RMSE aggregation."""

    truth_speed: float
    truth_direction: float
    valid_event: bool
    active_median: int
    estimates: dict  # (dmin, timestep) -> CmvEstimate


@dataclass(frozen=True)
class CellResult:
    rmse_speed: Optional[float]
    rmse_direction: Optional[float]
    n_valid: int
    scatter: tuple  # (sim, truth_speed, truth_dir, est_speed, est_dir, valid, capped)


@dataclass(frozen=True)
class CampaignResult:
    cells: dict  # (dmin, timestep, pr) -> CellResult
    n_simulations: int

    def cell(self, dmin, timestep, pr) -> CellResult:
        return self.cells[(float(dmin), int(timestep), float(pr))]


# Worker state for process pools; populated by the initializer after fork so
# the field and datasets are shipped once per worker, not once per task.
_STATE: dict = {}


def _init_worker(cfg: CampaignConfig, ds_by_pr: dict) -> None:
    _STATE["cfg"] = cfg
    _STATE["ds_by_pr"] = ds_by_pr


def _simulate_one(sim_index: int) -> dict:
    cfg: CampaignConfig = _STATE["cfg"]
    ds_by_pr: dict = _STATE["ds_by_pr"]
    truth = draw_truth(cfg.base_seed + sim_index)
    tcfg = TransitConfig(
        duration_s=cfg.duration_s,
        sampling_period_s=cfg.sampling_period_s,
        seed=cfg.base_seed + sim_index,
    )
    out = {}
    for pr, ds in ds_by_pr.items():
        series = run_transit(cfg.field, ds, cfg.mask, truth, tcfg)
        valid_event = is_valid_event(series, cfg.bounds, cfg.min_variability_s)
        active_median = _median_sensor_count(series)
        estimates = {}
        for dmin in cfg.dmin_list:
            grids = grid_series(series, GridSpec(cfg.bounds, dmin), cfg.k_neighbors)
            for ts in cfg.timestep_list:
                try:
                    surface = accumulate_cmae(grids, ts, dmin, cfg.v_cap)
                    est = estimate_cmv(surface, ts, dmin)
                except InsufficientPairsError:
                    est = invalid_estimate()
                estimates[(float(dmin), int(ts))] = est
        out[pr] = TransitOutcome(
            truth_speed=truth.speed,
            truth_direction=truth.direction_deg,
            valid_event=valid_event,
            active_median=active_median,
            estimates=estimates,
        )
    return out


def _median_sensor_count(series: MeasurementSeries) -> int:
    counts = sorted(len(s.sensors) for s in series.snapshots)
    return counts[(len(counts) - 1) // 2]


def run_campaign(cfg: CampaignConfig, jobs: int = 1) -> CampaignResult:
    """Run all simulations and aggregate per-cell RMSE tables.

    Aggregation is an ordered reduction over simulation indices, so the
    result is independent of how many worker processes were used.
    """
    ds_by_pr = {
        float(pr): subsample_by_penetration(cfg.dataset, pr, cfg.base_seed)
        for pr in cfg.pr_list
    }
    sims = range(cfg.n_simulations)
    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(cfg, ds_by_pr)
        ) as pool:
            per_sim = list(pool.map(_simulate_one, sims, chunksize=max(1, cfg.n_simulations // jobs)))
    else:
        _init_worker(cfg, ds_by_pr)
        per_sim = [_simulate_one(i) for i in sims]

    cells = {}
    for dmin in cfg.dmin_list:
        for ts in cfg.timestep_list:
            for pr in cfg.pr_list:
                key = (float(dmin), int(ts), float(pr))
                speed_err, dir_err, scatter = [], [], []
                for i, sim in enumerate(per_sim):
                    oc: TransitOutcome = sim[float(pr)]
                    est = oc.estimates[(float(dmin), int(ts))]
                    capped = bool(est.valid and est.speed >= cfg.v_cap - dmin / ts)
                    scatter.append(
                        (i, oc.truth_speed, oc.truth_direction,
                         est.speed, est.direction_deg, oc.valid_event, capped)
                    )
                    if oc.valid_event and est.valid:
                        speed_err.append(est.speed - oc.truth_speed)
                        dir_err.append(direction_error(oc.truth_direction, est.direction_deg))
                n_valid = len(speed_err)
                cells[key] = CellResult(
                    rmse_speed=rmse(speed_err) if n_valid else None,
                    rmse_direction=rmse(dir_err) if n_valid else None,
                    n_valid=n_valid,
                    scatter=tuple(scatter),
                )
    return CampaignResult(cells=cells, n_simulations=cfg.n_simulations)


def write_results_csv(result: CampaignResult, path) -> None:
    """dmin,timestep,pr,n_valid,rmse_speed_mps,rmse_direction_deg table."""
    lines = ["dmin,timestep,pr,n_valid,rmse_speed_mps,rmse_direction_deg"]
    for (dmin, ts, pr) in sorted(result.cells):
        cell = result.cells[(dmin, ts, pr)]
        rs = f"{cell.rmse_speed:.6f}" if cell.rmse_speed is not None else ""
        rd = f"{cell.rmse_direction:.6f}" if cell.rmse_direction is not None else ""
        lines.append(f"{dmin:g},{ts:g},{pr:g},{cell.n_valid},{rs},{rd}")
    Path(path).write_text("\n".join(lines) + "\n")


def scatter_filename(dmin, timestep, pr) -> str:
    return f"scatter_d{dmin:g}_t{timestep:g}_pr{pr:g}.csv"


def write_scatter_csvs(result: CampaignResult, outdir) -> list:
    """One scatter CSV per cell; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for (dmin, ts, pr), cell in sorted(result.cells.items()):
        lines = ["sim,truth_speed,truth_dir,est_speed,est_dir,valid_event,capped"]
        for sim, t_s, t_d, e_s, e_d, valid, capped in cell.scatter:
            lines.append(
                f"{sim},{t_s:.6f},{t_d:.6f},{e_s:.6f},{e_d:.6f},{int(valid)},{int(capped)}"
            )
        path = outdir / scatter_filename(dmin, ts, pr)
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written
