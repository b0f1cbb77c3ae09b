"""Analytical WCL error distribution."""

from wclkit.theory.axis import (
    AxisErrorStats,
    axis_sum_stats_correlated,
    axis_sum_stats_iid,
    mu_constants,
    rho_ab_correlated,
    rho_ab_iid,
)
from wclkit.theory.crossaxis import CrossAxisResult, cross_axis_correlation
from wclkit.theory.pdf2d import ErrorCovariance2D, ErrorPdf, error_2d_distribution, norm_density
from wclkit.theory.pipeline import (
    PlacementAverage,
    TheoryResult,
    analyze_deployment,
    average_over_placements,
)
from wclkit.theory.ratio import ratio_moments_hayya, ratio_moments_quadrature, ratio_pdf

__all__ = [
    "AxisErrorStats",
    "CrossAxisResult",
    "ErrorCovariance2D",
    "ErrorPdf",
    "PlacementAverage",
    "TheoryResult",
    "analyze_deployment",
    "average_over_placements",
    "axis_sum_stats_correlated",
    "axis_sum_stats_iid",
    "cross_axis_correlation",
    "error_2d_distribution",
    "mu_constants",
    "norm_density",
    "ratio_moments_hayya",
    "ratio_moments_quadrature",
    "ratio_pdf",
    "rho_ab_correlated",
    "rho_ab_iid",
]
