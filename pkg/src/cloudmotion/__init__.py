"""Cloud-shadow motion estimation from mobile irradiance sensor networks.

Conventions used throughout: coordinates are meters in a local planar
frame, x east and y north; directions are degrees clockwise from north
(0 = moving north, 90 = moving east); times are integer seconds.
"""
from .cmae import (
    CmaeSurface,
    CmvEstimate,
    Displacement,
    accumulate_cmae,
    displacement_candidates,
    estimate_cmv,
    mae_for_displacement,
)
from .evaluation import (
    CampaignConfig,
    CampaignResult,
    direction_error,
    rmse,
    run_campaign,
)
from .fleet import (
    SensorSnapshot,
    ShadowMask,
    TrajectoryDataset,
    active_sensors,
    load_shadow_mask,
    load_trajectories,
    subsample_by_penetration,
)
from .fractal_field import (
    ClearSkyField,
    CloudIndexField,
    FractalSurface,
    cloud_to_clearsky,
    generate_fractal,
    make_clearsky_field,
    quantize_8bit,
    required_field_side,
    to_cloud_index,
)
from .geometry import Rect
from .gridding import GridSnapshot, GridSpec, grid_series, idw_interpolate
from .transit import (
    MeasurementSeries,
    MotionTruth,
    TransitConfig,
    draw_truth,
    is_valid_event,
    run_transit,
    sample_field_at,
)

__all__ = [
    "CampaignConfig",
    "CampaignResult",
    "ClearSkyField",
    "CloudIndexField",
    "CmaeSurface",
    "CmvEstimate",
    "Displacement",
    "FractalSurface",
    "GridSnapshot",
    "GridSpec",
    "MeasurementSeries",
    "MotionTruth",
    "Rect",
    "SensorSnapshot",
    "ShadowMask",
    "TrajectoryDataset",
    "TransitConfig",
    "accumulate_cmae",
    "active_sensors",
    "cloud_to_clearsky",
    "direction_error",
    "displacement_candidates",
    "draw_truth",
    "estimate_cmv",
    "generate_fractal",
    "grid_series",
    "idw_interpolate",
    "is_valid_event",
    "load_shadow_mask",
    "load_trajectories",
    "mae_for_displacement",
    "make_clearsky_field",
    "quantize_8bit",
    "required_field_side",
    "rmse",
    "run_campaign",
    "run_transit",
    "sample_field_at",
    "subsample_by_penetration",
    "to_cloud_index",
]
