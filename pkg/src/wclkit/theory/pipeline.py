"""End-to-end analytical error distribution for one deployment, and placement averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from wclkit.channel import ChannelParams
from wclkit.placement import Deployment, average_node_spacing
from wclkit.rng import Rng
from wclkit.theory.axis import AxisErrorStats, axis_inputs, mu_constants
from wclkit.theory.crossaxis import CrossAxisResult, cross_axis_correlation
from wclkit.theory.pdf2d import ErrorPdf, error_2d_distribution
from wclkit.theory.ratio import ratio_moments_hayya, ratio_moments_quadrature


@dataclass(frozen=True)
class TheoryResult:
    axis_x: AxisErrorStats
    axis_y: AxisErrorStats
    cross: CrossAxisResult
    pdf: ErrorPdf

    @property
    def mean(self) -> float:
        return self.pdf.mean

    @property
    def std(self) -> float:
        return self.pdf.std


@dataclass(frozen=True)
class PlacementAverage:
    mean_err_m: float
    mean_err_over_D: float
    std_err_m: float  # average of per-placement error std
    se_mean_m: float  # standard error of mean_err_m across placements
    n_placements: int
    D: float
    per_placement: np.ndarray


def axis_error_stats(params: ChannelParams, dep: Deployment, mu, sigma_l: float, axis,
                     method: str = "quadrature") -> AxisErrorStats:
    st, rho = axis_inputs(params, dep, mu, sigma_l, axis)
    fn = ratio_moments_quadrature if method == "quadrature" else ratio_moments_hayya
    m_hat, s_hat = fn(st.m_a, st.sigma_a, st.m_b, st.sigma_b, rho)
    return AxisErrorStats(st.m_a, st.m_b, st.sigma_a, st.sigma_b, rho, m_hat, s_hat, method)


def analyze_deployment(params: ChannelParams, dep: Deployment, pmin: float, sigma_l: float = 0.0,
                       method: str = "quadrature", cross: str = "closed_form",
                       pdf_method: str = "auto") -> TheoryResult:
    """Analytical distribution of the WCL error norm for fixed node positions.

    ``cross`` picks the x/y correlation: "closed_form" (the factorized
    expansion) or "guarded" (quadrature of the reduced expectation).
    """
    if method not in ("quadrature", "hayya"):
        raise ValueError(f"unknown moment method {method!r}")
    mu = mu_constants(params, dep, pmin)
    ax = axis_error_stats(params, dep, mu, sigma_l, 0, method)
    ay = axis_error_stats(params, dep, mu, sigma_l, 1, method)
    cr = cross_axis_correlation(dep, params, pmin, sigma_l,
                                axis_moments=((ax.m_hat, ax.sigma_hat), (ay.m_hat, ay.sigma_hat)))
    rho = cr.rho_xy if cross == "closed_form" else cr.rho_guarded
    pdf = error_2d_distribution(ax, ay, rho, method=pdf_method)
    return TheoryResult(ax, ay, cr, pdf)


def average_over_placements(make_deployment: Callable[[Rng], Deployment], params: ChannelParams,
                            pmin: float, n_placements: int, rng: Rng, sigma_l: float = 0.0,
                            method: str = "quadrature") -> PlacementAverage:
    """Monte Carlo average of the analytical error over random node placements."""
    if n_placements < 1:
        raise ValueError("n_placements must be >= 1")
    means, stds, spacing = [], [], None
    for k in range(n_placements):
        dep = make_deployment(rng.child(k))
        res = analyze_deployment(params, dep, pmin, sigma_l, method)
        means.append(res.mean)
        stds.append(res.std)
        spacing = average_node_spacing(dep)
    means = np.asarray(means)
    m = math.fsum(means) / len(means)
    se = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
    return PlacementAverage(m, m / spacing, math.fsum(stds) / len(stds), se, n_placements, spacing, means)
