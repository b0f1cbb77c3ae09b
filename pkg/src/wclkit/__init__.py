"""Weighted centroid localization of a non-cooperative transmitter from RSS."""

from wclkit.rng import Rng
from wclkit.placement import (
    Deployment,
    Disk,
    Square,
    apply_position_noise,
    average_node_spacing,
    place_fixed_grid,
    place_random_grid,
    place_uniform_disk,
    place_uniform_square,
)
from wclkit.channel import (
    ChannelParams,
    CoverageMask,
    RssRealization,
    mean_received_power,
    sample_coverage,
    sample_rss,
    sample_shadowing,
    shadowing_covariance,
)
from wclkit.estimators import (
    Estimate,
    WclConfig,
    centroid_estimate,
    compute_pmin,
    lateration_estimate,
    localization_error,
    select_participants,
    strongest_node_estimate,
    wcl_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "CoverageMask",
    "Deployment",
    "Disk",
    "Estimate",
    "Rng",
    "RssRealization",
    "Square",
    "WclConfig",
    "apply_position_noise",
    "average_node_spacing",
    "centroid_estimate",
    "compute_pmin",
    "lateration_estimate",
    "localization_error",
    "mean_received_power",
    "place_fixed_grid",
    "place_random_grid",
    "place_uniform_disk",
    "place_uniform_square",
    "sample_coverage",
    "sample_rss",
    "sample_shadowing",
    "select_participants",
    "shadowing_covariance",
    "strongest_node_estimate",
    "wcl_estimate",
]
