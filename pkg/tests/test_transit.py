import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cloudmotion.fleet import TrajectoryDataset
from cloudmotion.fractal_field import ClearSkyField
from cloudmotion.geometry import Rect
from cloudmotion.transit import (
    FieldSizingError,
    MotionTruth,
    TransitConfig,
    default_field_anchor,
    draw_truth,
    is_valid_event,
    run_transit,
    sample_field_at,
)

BOUNDS = Rect(0.0, 0.0, 600.0, 900.0)


def _coordinate_field(side=512, pixel=1.0):
    """kstar encodes the pixel index so lookups are verifiable."""
    iy, ix = np.mgrid[0:side, 0:side]
    kstar = (0.09 + (iy * side + ix) * (1.11 / (side * side))).astype(np.float32)
    return ClearSkyField(kstar=kstar, side_px=side, pixel_size_m=pixel)


def _flat_field(value=1.2, side=2048, pixel=8.0):
    return ClearSkyField(
        kstar=np.full((side, side), value, dtype=np.float32), side_px=side, pixel_size_m=pixel
    )


def _static_fleet(positions, duration_s):
    recs = []
    for t in range(duration_s + 1):
        for i, (x, y) in enumerate(positions):
            recs.append((f"v{i:03d}", t, x, y))
    recs.sort(key=lambda r: (r[1], r[0]))
    return TrajectoryDataset(records=tuple(recs), window=(0, duration_s), bounds=BOUNDS)


# ------------------------------------------------------------ motion truth

def test_velocity_convention():
    north = MotionTruth(10.0, 0.0).velocity
    east = MotionTruth(10.0, 90.0).velocity
    assert north == pytest.approx([0.0, 10.0], abs=1e-9)
    assert east == pytest.approx([10.0, 0.0], abs=1e-9)


def test_truth_validation():
    with pytest.raises(ValueError):
        MotionTruth(-1.0, 0.0)
    with pytest.raises(ValueError):
        MotionTruth(5.0, 360.0)


def test_draw_truth_deterministic():
    a, b = draw_truth(42), draw_truth(42)
    assert (a.speed, a.direction_deg) == (b.speed, b.direction_deg)
    assert a.speed == pytest.approx(23.444725408122938, rel=1e-12)
    assert a.direction_deg == pytest.approx(157.99623831073885, rel=1e-12)


def test_draw_truth_ranges_and_uniformity():
    truths = [draw_truth(i) for i in range(10_000)]
    speeds = np.array([t.speed for t in truths])
    dirs = np.array([t.direction_deg for t in truths])
    assert speeds.min() >= 1.0 and speeds.max() <= 30.0
    assert dirs.min() >= 0.0 and dirs.max() < 360.0
    obs, _ = np.histogram(dirs, bins=36, range=(0.0, 360.0))
    expected = len(truths) / 36
    chi2 = float(((obs - expected) ** 2 / expected).sum())
    # 35 dof: mean 35, sd sqrt(70); stay within 3 sigma
    assert chi2 < 35 + 3 * math.sqrt(70)


# --------------------------------------------------------------- sampling

def test_sample_static_truth_is_constant_over_time():
    field = _coordinate_field()
    truth = MotionTruth(0.0, 0.0)
    pos = [(100.5, 200.5), (300.25, 400.75)]
    s0 = sample_field_at(field, (0.0, 0.0), truth, 0, pos)
    s9 = sample_field_at(field, (0.0, 0.0), truth, 9, pos)
    assert [s[2] for s in s0.sensors] == [s[2] for s in s9.sensors]


def test_sample_direction_zero_offsets_lookup_south():
    # the field moves north, so the t=10 lookup lands 100 m south (in field
    # coordinates) of the t=0 lookup
    field = _coordinate_field()
    truth = MotionTruth(10.0, 0.0)
    p = [(128.5, 200.5)]
    k0 = sample_field_at(field, (0.0, 0.0), truth, 0, p).sensors[0][2]
    k10 = sample_field_at(field, (0.0, 0.0), truth, 10, p).sensors[0][2]
    assert k0 == field.kstar[200, 128]
    assert k10 == field.kstar[100, 128]


def test_sample_same_position_same_value():
    field = _coordinate_field()
    truth = MotionTruth(3.0, 45.0)
    snap = sample_field_at(field, (-100.0, -100.0), truth, 5, [(50.0, 60.0), (50.0, 60.0)])
    assert snap.sensors[0][2] == snap.sensors[1][2]


def test_sample_outside_field_fails_fast():
    field = _coordinate_field(side=64)
    truth = MotionTruth(10.0, 180.0)  # lookups drift north
    with pytest.raises(FieldSizingError):
        sample_field_at(field, (0.0, 0.0), truth, 50, [(32.0, 32.0)])


@given(
    speed=st.floats(min_value=0.5, max_value=5.0),
    direction=st.floats(min_value=0.0, max_value=359.999),
    t=st.integers(min_value=0, max_value=20),
)
@settings(max_examples=60)
def test_galilean_consistency(speed, direction, t):
    # sampling at time t equals sampling at time 0 with positions displaced
    # by -t*v (up to pixel-boundary ties, excluded below)
    field = _coordinate_field()
    truth = MotionTruth(speed, direction)
    v = truth.velocity
    positions = [(200.5, 250.5), (310.5, 180.5)]
    for x, y in positions:
        for q in (x - t * v[0], y - t * v[1]):
            assume(abs(q - round(q)) > 1e-7)
    moved = [(x - t * v[0], y - t * v[1]) for x, y in positions]
    s_t = sample_field_at(field, (0.0, 0.0), truth, t, positions)
    s_0 = sample_field_at(field, (0.0, 0.0), truth, 0, moved)
    assert [s[2] for s in s_t.sensors] == [s[2] for s in s_0.sensors]


# ------------------------------------------------------------ run_transit

def test_transit_snapshot_count():
    field = _flat_field()
    ds = _static_fleet([(300.0, 450.0)], 300)
    series = run_transit(field, ds, None, MotionTruth(5.0, 90.0), TransitConfig(300, 1))
    assert len(series.snapshots) == 301
    series2 = run_transit(field, ds, None, MotionTruth(5.0, 90.0), TransitConfig(300, 2))
    assert len(series2.snapshots) == 151


def test_transit_deterministic():
    field = _flat_field()
    ds = _static_fleet([(100.0, 100.0), (500.0, 800.0)], 60)
    cfg = TransitConfig(60, 1)
    truth = MotionTruth(12.0, 200.0)
    a = run_transit(field, ds, None, truth, cfg)
    b = run_transit(field, ds, None, truth, cfg)
    assert a == b


def test_transit_requires_dataset_coverage():
    field = _flat_field()
    ds = _static_fleet([(300.0, 450.0)], 100)
    with pytest.raises(ValueError, match="covers"):
        run_transit(field, ds, None, MotionTruth(5.0, 0.0), TransitConfig(300, 1))


def test_transit_empty_instant_gives_empty_snapshot():
    field = _flat_field()
    recs = tuple(("v0", t, 300.0, 450.0) for t in (0, 2))  # nothing at t=1
    ds = TrajectoryDataset(records=recs, window=(0, 2), bounds=BOUNDS)
    series = run_transit(field, ds, None, MotionTruth(2.0, 0.0), TransitConfig(2, 1))
    assert len(series.snapshots[1].sensors) == 0


def test_default_anchor_centers_the_sweep():
    field = _flat_field(side=2048, pixel=8.0)
    truth = MotionTruth(20.0, 135.0)
    anchor = default_field_anchor(field, BOUNDS, truth, 300)
    # at mid-transit the lookup of the area center sits at the field center
    v = truth.velocity
    cx, cy = BOUNDS.center
    mid_lookup = (cx - anchor[0] - 150 * v[0], cy - anchor[1] - 150 * v[1])
    assert mid_lookup[0] == pytest.approx(field.extent_m / 2)
    assert mid_lookup[1] == pytest.approx(field.extent_m / 2)


def test_default_anchor_covers_max_speed_transit():
    # field sized by the duration*v_max + diagonal rule must never raise a
    # sizing error when the sweep is centered
    side, pixel = 2048, 8.0  # extent 16384 >= 9000 + diag
    field = _flat_field(side=side, pixel=pixel)
    ds = _static_fleet([(0.0, 0.0), (600.0, 900.0)], 300)
    for direction in (0.0, 45.0, 137.0, 270.0):
        truth = MotionTruth(30.0, direction)
        run_transit(field, ds, None, truth, TransitConfig(300, 1))


def test_config_validation():
    with pytest.raises(ValueError):
        TransitConfig(duration_s=301, sampling_period_s=2)
    with pytest.raises(ValueError):
        TransitConfig(duration_s=0)


# ------------------------------------------------------------ validity

def _gradient_field(side=1024):
    # clear plateau, then a linear ramp down across x in [700, 940], dark after
    kstar = np.full((side, side), 1.2, dtype=np.float32)
    ramp = np.linspace(1.2, 0.09, 240, dtype=np.float32)
    kstar[:, 700:940] = ramp[None, :]
    kstar[:, 940:] = 0.09
    return ClearSkyField(kstar=kstar, side_px=side, pixel_size_m=1.0)


def test_fully_clear_field_never_valid():
    field = _flat_field(1.2)
    ds = _static_fleet([(300.0, 450.0), (250.0, 400.0)], 300)
    series = run_transit(field, ds, None, MotionTruth(10.0, 90.0), TransitConfig(300, 1))
    assert not is_valid_event(series, BOUNDS, 60)


def test_edge_crossing_central_rectangle_is_valid():
    # lookup point of the central sensor crosses the 240 m ramp at 2 m/s:
    # ~120 s of per-second changes, comfortably above the 60 s requirement
    field = _gradient_field()
    ds = _static_fleet([(300.0, 450.0)], 300)
    truth = MotionTruth(2.0, 90.0)
    cfg = TransitConfig(300, 1, field_anchor=(-700.0, 0.0))
    series = run_transit(field, ds, None, truth, cfg)
    assert is_valid_event(series, BOUNDS, 60)
    # raising the requirement beyond the crossing time flips the verdict
    assert not is_valid_event(series, BOUNDS, 150)


def test_variability_outside_central_rectangle_does_not_count():
    field = _gradient_field()
    ds = _static_fleet([(50.0, 50.0)], 300)  # corner rectangle only
    truth = MotionTruth(2.0, 90.0)
    cfg = TransitConfig(300, 1, field_anchor=(-700.0, 0.0))
    series = run_transit(field, ds, None, truth, cfg)
    assert not is_valid_event(series, BOUNDS, 60)


def test_new_vehicle_modal_rule():
    # fresh ids every second straddling a static shadow edge: the minority
    # sensor differs from the instant's mode, so every instant qualifies
    side = 1024
    kstar = np.full((side, side), 1.2, dtype=np.float32)
    kstar[:, 300:] = 0.09
    field = ClearSkyField(kstar=kstar, side_px=side, pixel_size_m=1.0)
    truth = MotionTruth(0.0, 0.0)
    recs = []
    for t in range(151):
        recs.append((f"a{t:03d}", t, 290.0, 450.0))
        recs.append((f"b{t:03d}", t, 310.0, 450.0))
    ds = TrajectoryDataset(records=tuple(sorted(recs, key=lambda r: (r[1], r[0]))),
                           window=(0, 150), bounds=BOUNDS)
    series = run_transit(field, ds, None, truth, TransitConfig(150, 1, field_anchor=(0.0, 0.0)))
    assert is_valid_event(series, BOUNDS, 60)
    # same-side fresh ids agree with the mode: nothing ever qualifies
    recs2 = tuple((f"c{t:03d}", t, 290.0, 450.0) for t in range(151))
    ds2 = TrajectoryDataset(records=recs2, window=(0, 150), bounds=BOUNDS)
    series2 = run_transit(field, ds2, None, truth, TransitConfig(150, 1, field_anchor=(0.0, 0.0)))
    assert not is_valid_event(series2, BOUNDS, 60)


def test_validity_monotone_in_requirement():
    field = _gradient_field()
    ds = _static_fleet([(300.0, 450.0)], 300)
    cfg = TransitConfig(300, 1, field_anchor=(-700.0, 0.0))
    series = run_transit(field, ds, None, MotionTruth(2.0, 90.0), cfg)
    verdicts = [is_valid_event(series, BOUNDS, m) for m in (10, 60, 110, 150, 200)]
    # once invalid, stays invalid as the requirement grows
    assert verdicts == sorted(verdicts, reverse=True)
