#!/usr/bin/env python3
"""Desk-scale penetration-rate sweep on a synthetic fleet.

Runs one seeded Monte Carlo campaign (shared truth draws across all cells)
over a list of penetration rates and prints the RMSE table.  Defaults
reproduce the highway-ramp-analog setup: 600 m x 900 m area, 100 vehicles,
dmin 10 m, time step 10 s, 1 s sampling.
"""
import argparse
import time

from cloudmotion.evaluation import CampaignConfig, run_campaign
from cloudmotion.fractal_field import (
    auto_pixel_size,
    make_clearsky_field,
    required_field_side,
)
from cloudmotion.geometry import Rect
from cloudmotion.synth import random_walk_fleet
from cloudmotion.transit import SPEED_MAX_MPS


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sims", type=int, default=30)
    ap.add_argument("--vehicles", type=int, default=100)
    ap.add_argument("--bounds", default="0,0,600,900")
    ap.add_argument("--pr", default="0.1,0.2,0.4,0.7,1.0", help="penetration rates")
    ap.add_argument("--dmin", type=float, default=10.0)
    ap.add_argument("--timestep", type=int, default=10)
    ap.add_argument("--field-side", type=int, default=2048)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=2)
    args = ap.parse_args()

    bounds = Rect(*(float(p) for p in args.bounds.split(",")))
    required = required_field_side(300, SPEED_MAX_MPS, bounds.diagonal)
    pixel = auto_pixel_size(args.field_side, required)
    print(f"field: {args.field_side} px at {pixel:g} m/px ({args.field_side * pixel:g} m extent)")

    cfg = CampaignConfig(
        field=make_clearsky_field(args.field_side, 1.5, seed=args.seed + 1, pixel_size_m=pixel),
        dataset=random_walk_fleet(args.vehicles, bounds, 300, seed=args.seed + 2),
        bounds=bounds,
        n_simulations=args.sims,
        dmin_list=(args.dmin,),
        timestep_list=(args.timestep,),
        pr_list=tuple(float(p) for p in args.pr.split(",")),
        base_seed=args.seed,
    )
    t0 = time.time()
    result = run_campaign(cfg, jobs=args.jobs)
    print(f"{args.sims} simulations x {len(cfg.pr_list)} cells in {time.time() - t0:.0f} s\n")
    print(f"{'pr':>5} {'n_valid':>8} {'rmse_speed':>11} {'rmse_dir':>9}")
    for pr in cfg.pr_list:
        cell = result.cell(args.dmin, args.timestep, pr)
        rs = f"{cell.rmse_speed:.2f}" if cell.rmse_speed is not None else "-"
        rd = f"{cell.rmse_direction:.2f}" if cell.rmse_direction is not None else "-"
        print(f"{pr:>5g} {cell.n_valid:>8d} {rs:>11} {rd:>9}")


if __name__ == "__main__":
    main()
