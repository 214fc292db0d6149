import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudmotion.evaluation import (
    CampaignConfig,
    UndefinedStatisticError,
    direction_error,
    rmse,
    run_campaign,
    scatter_filename,
    write_results_csv,
    write_scatter_csvs,
)
from cloudmotion.fractal_field import ClearSkyField, auto_pixel_size, make_clearsky_field, required_field_side
from cloudmotion.geometry import Rect
from cloudmotion.synth import random_walk_fleet

BOUNDS = Rect(0.0, 0.0, 300.0, 300.0)
DURATION = 120


def _small_config(**overrides):
    required = required_field_side(DURATION, 30.0, BOUNDS.diagonal)
    pixel = auto_pixel_size(512, required)
    defaults = dict(
        field=make_clearsky_field(512, 1.5, seed=99, pixel_size_m=pixel),
        dataset=random_walk_fleet(40, BOUNDS, DURATION, seed=4),
        bounds=BOUNDS,
        n_simulations=2,
        dmin_list=(10.0,),
        timestep_list=(10,),
        pr_list=(1.0,),
        base_seed=2,
        sampling_period_s=1,
        duration_s=DURATION,
    )
    defaults.update(overrides)
    return CampaignConfig(**defaults)


# ------------------------------------------------------------------ metrics

def test_rmse_examples():
    assert rmse([0.0, 0.0, 0.0]) == 0.0
    assert rmse([3.0, -4.0]) == pytest.approx(np.sqrt(25.0 / 2.0), rel=1e-12)
    assert rmse([3.0, -4.0]) == pytest.approx(3.5355, abs=1e-4)
    assert rmse([2.5] * 7) == pytest.approx(2.5, rel=1e-12)


def test_rmse_empty_is_error():
    with pytest.raises(UndefinedStatisticError):
        rmse([])


def test_direction_error_examples():
    assert abs(direction_error(350.0, 10.0)) == pytest.approx(20.0)
    assert direction_error(123.4, 123.4) == 0.0
    assert direction_error(0.0, 180.0) == 180.0


@given(st.floats(0.0, 359.999), st.floats(0.0, 359.999))
def test_direction_error_wrapped(truth, est):
    err = direction_error(truth, est)
    assert -180.0 < err <= 180.0
    # the wrapped error reproduces the estimate angle on the circle
    a, b = np.deg2rad(truth + err), np.deg2rad(est)
    assert np.cos(a) == pytest.approx(np.cos(b), abs=1e-9)
    assert np.sin(a) == pytest.approx(np.sin(b), abs=1e-9)


# ---------------------------------------------------------------- campaigns

def test_campaign_validates_timestep_limit():
    with pytest.raises(ValueError, match="shorter-side"):
        _small_config(timestep_list=(20,))  # 300 m / 30 mps = 10 s max


def test_campaign_validates_n_simulations():
    with pytest.raises(ValueError):
        _small_config(n_simulations=0)


def test_campaign_single_sim_near_exact():
    # base_seed 2 draws ~8.6 m/s @ 107.5 deg; a pure-translation sweep over a
    # dense fleet must land within the displacement quantum (1 m/s)
    cfg = _small_config(n_simulations=1)
    result = run_campaign(cfg)
    cell = result.cell(10.0, 10, 1.0)
    assert cell.n_valid == 1
    sim, t_s, t_d, e_s, e_d, valid, capped = cell.scatter[0]
    assert valid and not capped
    assert e_s == pytest.approx(t_s, abs=1.0)
    assert abs(direction_error(t_d, e_d)) < 10.0


def test_campaign_deterministic_and_jobs_invariant():
    cfg = _small_config()
    r1 = run_campaign(cfg, jobs=1)
    r2 = run_campaign(cfg, jobs=1)
    r3 = run_campaign(cfg, jobs=2)
    assert r1.cells.keys() == r2.cells.keys() == r3.cells.keys()
    for key in r1.cells:
        assert r1.cells[key] == r2.cells[key]
        assert r1.cells[key] == r3.cells[key]


def test_campaign_paired_truth_draws_across_cells():
    cfg = _small_config(pr_list=(0.5, 1.0), n_simulations=3)
    result = run_campaign(cfg)
    truths_half = [(r[1], r[2]) for r in result.cell(10.0, 10, 0.5).scatter]
    truths_full = [(r[1], r[2]) for r in result.cell(10.0, 10, 1.0).scatter]
    assert truths_half == truths_full


def test_campaign_zero_valid_cell_is_reported_empty():
    flat = ClearSkyField(
        kstar=np.full((512, 512), 1.2, dtype=np.float32),
        side_px=512,
        pixel_size_m=auto_pixel_size(512, required_field_side(DURATION, 30.0, BOUNDS.diagonal)),
    )
    cfg = _small_config(field=flat)
    result = run_campaign(cfg)
    cell = result.cell(10.0, 10, 1.0)
    assert cell.n_valid == 0
    assert cell.rmse_speed is None and cell.rmse_direction is None
    assert len(cell.scatter) == cfg.n_simulations


# ------------------------------------------------------------------- output

def test_results_csv_format(tmp_path):
    cfg = _small_config()
    result = run_campaign(cfg)
    path = tmp_path / "results.csv"
    write_results_csv(result, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "dmin,timestep,pr,n_valid,rmse_speed_mps,rmse_direction_deg"
    assert len(lines) == 1 + len(result.cells)
    first = lines[1].split(",")
    assert first[0] == "10" and first[1] == "10" and first[2] == "1"


def test_scatter_csv_format(tmp_path):
    cfg = _small_config()
    result = run_campaign(cfg)
    paths = write_scatter_csvs(result, tmp_path)
    assert [p.name for p in paths] == [scatter_filename(10.0, 10, 1.0)]
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "sim,truth_speed,truth_dir,est_speed,est_dir,valid_event,capped"
    assert len(lines) == 1 + cfg.n_simulations
    assert lines[1].split(",")[0] == "0"
