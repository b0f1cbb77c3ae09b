"""Moments of the numerator/denominator sums behind one WCL coordinate.

One coordinate of the WCL estimate is ``a / b`` with ``a = sum q_i x_i`` and
``b = sum q_i``, where ``q_i = P_i - P_min ~ N(mu_i, .)`` and ``x_i`` is the
node's measured coordinate relative to the PU.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from wclkit.channel import ChannelParams, correlation_matrix, mean_received_power
from wclkit.placement import Deployment


class SumStats(NamedTuple):
    m_a: float
    sigma_a: float
    m_b: float
    sigma_b: float


@dataclass(frozen=True)
class AxisErrorStats:
    m_a: float
    m_b: float
    sigma_a: float
    sigma_b: float
    rho_ab: float
    m_hat: float
    sigma_hat: float
    method: str

    def __post_init__(self):
        if not -1 - 1e-12 <= self.rho_ab <= 1 + 1e-12:
            raise ValueError("|rho_ab| must be <= 1")
        if self.sigma_a < 0 or self.sigma_b < 0:
            raise ValueError("standard deviations must be >= 0")


def relative_coords(dep: Deployment, axis) -> np.ndarray:
    """True node coordinates along ``axis`` (0/'x' or 1/'y'), PU at the origin."""
    k = {"x": 0, "y": 1}.get(axis, axis)
    return dep.true_positions[:, k] - dep.pu_position[k]


def mu_constants(params: ChannelParams, dep: Deployment, pmin: float) -> np.ndarray:
    """Mean weight of each node: path-loss power at its true distance minus P_min."""
    d = dep.true_distances()
    if np.any(d <= 0):
        raise ValueError("nodes must be distinct from the PU")
    return mean_received_power(params, d) - pmin


def axis_sum_stats_iid(dep: Deployment, mu, sigma_s: float, sigma_l: float, axis) -> SumStats:
    x = relative_coords(dep, axis)
    mu = np.asarray(mu, float)
    n = len(mu)
    var_a = n * sigma_l**2 * sigma_s**2 + np.sum(sigma_l**2 * mu**2 + sigma_s**2 * x**2)
    return SumStats(float(mu @ x), float(np.sqrt(var_a)), float(mu.sum()), float(np.sqrt(n) * sigma_s))


def rho_ab_iid(dep: Deployment, mu, sigma_s: float, sigma_l: float, axis) -> float:
    # signed sum of coordinates in the numerator
    x = relative_coords(dep, axis)
    mu = np.asarray(mu, float)
    n = len(mu)
    den = np.sqrt(n**2 * sigma_l**2 * sigma_s**2 + n * np.sum(sigma_l**2 * mu**2 + sigma_s**2 * x**2))
    if den == 0:
        return 0.0
    return float(np.clip(sigma_s * x.sum() / den, -1.0, 1.0))


def sum_covariance(x: np.ndarray, mu: np.ndarray, omega: np.ndarray, sigma_l: float):
    """Variances of ``a``, ``b`` and their covariance for a general shadowing covariance.

    Exact under independent Gaussian position errors: the diagonal of
    Cov(q_i x_i) picks up ``sigma_l^2 (Omega_ii + mu_i^2)``.
    """
    var_a = x @ omega @ x + sigma_l**2 * float(np.sum(np.diag(omega) + mu**2))
    var_b = float(omega.sum())
    cov_ab = float(x @ omega.sum(axis=1))
    return float(var_a), var_b, cov_ab


def _corr_omega(dep: Deployment, sigma_s: float, x_c: float) -> np.ndarray:
    return sigma_s**2 * correlation_matrix(dep.true_positions, x_c)


def axis_sum_stats_correlated(dep: Deployment, mu, sigma_s: float, x_c: float, sigma_l: float, axis) -> SumStats:
    x = relative_coords(dep, axis)
    mu = np.asarray(mu, float)
    var_a, var_b, _ = sum_covariance(x, mu, _corr_omega(dep, sigma_s, x_c), sigma_l)
    return SumStats(float(mu @ x), float(np.sqrt(var_a)), float(mu.sum()), float(np.sqrt(var_b)))


def rho_ab_correlated(dep: Deployment, mu, sigma_s: float, x_c: float, sigma_l: float, axis) -> float:
    """1'Lx / sqrt((x'Lx + position-noise term) 1'L1), L the correlation matrix."""
    x = relative_coords(dep, axis)
    mu = np.asarray(mu, float)
    lam = correlation_matrix(dep.true_positions, x_c)
    if sigma_s == 0:
        return 0.0
    noise = sigma_l**2 * (len(mu) + float(np.sum(mu**2)) / sigma_s**2)
    den = np.sqrt((x @ lam @ x + noise) * lam.sum())
    if den == 0:
        return 0.0
    return float(np.clip(lam.sum(axis=0) @ x / den, -1.0, 1.0))


def axis_inputs(params: ChannelParams, dep: Deployment, mu, sigma_l: float, axis):
    """(SumStats, rho_ab) for the channel's shadowing mode."""
    if params.correlated:
        st = axis_sum_stats_correlated(dep, mu, params.sigma_s, params.x_c, sigma_l, axis)
        rho = rho_ab_correlated(dep, mu, params.sigma_s, params.x_c, sigma_l, axis)
    else:
        st = axis_sum_stats_iid(dep, mu, params.sigma_s, sigma_l, axis)
        rho = rho_ab_iid(dep, mu, params.sigma_s, sigma_l, axis)
    return st, rho
