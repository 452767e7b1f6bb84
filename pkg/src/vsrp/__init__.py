"""Steered-response power localization over point and volumetric grids."""

from .correlation import (
    CorrelationSet,
    FramePlan,
    LagRangeError,
    correlate_frame,
    cross_correlation_time,
    default_max_lag,
    frame_signal,
    gcc,
)
from .geometry import (
    MicArray,
    PointGrid,
    SearchRegion,
    VolumetricGrid,
    build_point_grid,
    build_volumetric_grid,
    tdoa_samples,
)
from .localizers import (
    EnergyMap,
    Estimate,
    build_msrp_windows,
    csrp_localize,
    energy_map,
    msrp_lag_bounds,
    msrp_localize,
    rvsrp_localize,
    vsrp_localize,
)
from .room import RoomSpec, image_method_rir, render_mic_signals, t60_to_beta
from .tables import (
    ComplexityReport,
    LagSets,
    PointLagTable,
    VolumeLagSets,
    build_point_table,
    build_volume_lag_sets,
    lag_sets_from_geometry,
    mean_cardinality,
    predict_ops_csrp,
    predict_ops_rvsrp,
    predict_ops_vsrp,
)

__version__ = "0.1.0"
