"""Correlation between the x and y errors of the WCL estimate.

Both coordinates share the denominator ``t3 = sum q_i``, so the errors are
correlated even when the deployment is symmetric. The expectation
``E[t1 t2 / t3^2]`` is reduced to one standard normal variable by a QR
factorization of the square-root covariance columns, then approximated in
closed form. A guarded quadrature of the same one-dimensional
expectation is returned next to it as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from wclkit.channel import ChannelParams, correlation_matrix
from wclkit.placement import Deployment
from wclkit.theory.axis import mu_constants, relative_coords
from wclkit.theory.ratio import ratio_moments_hayya, ratio_moments_quadrature


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class CrossAxisResult:
    rho_xy: float
    rho_guarded: float
    e_xy: float  # E[x y] by the closed-form approximation
    e_xy_guarded: float
    m_x: float
    m_y: float
    sigma_x: float
    sigma_y: float
    t_mean: np.ndarray
    t_cov: np.ndarray
    r: np.ndarray
    clipped: bool


def shadowing_omega(params: ChannelParams, dep: Deployment) -> np.ndarray:
    if params.correlated:
        return params.sigma_s**2 * correlation_matrix(dep.true_positions, params.x_c)
    return params.sigma_s**2 * np.eye(dep.n)


def t_statistics(dep: Deployment, mu, omega: np.ndarray, sigma_l: float):
    """Mean vector and covariance of t = (sum q x, sum q y, sum q).

    Position errors are independent across nodes and axes, so they only add
    ``sigma_l^2 (Omega_ii + mu_i^2)`` to the diagonal of the t1 and t2 variances.
    """
    x = relative_coords(dep, 0)
    y = relative_coords(dep, 1)
    mu = np.asarray(mu, float)
    basis = np.column_stack([x, y, np.ones_like(x)])
    mean = basis.T @ mu
    cov = basis.T @ omega @ basis
    extra = sigma_l**2 * float(np.sum(np.diag(omega) + mu**2))
    cov[0, 0] += extra
    cov[1, 1] += extra
    return mean, cov


def symmetric_sqrt(cov: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    if w.min() < -tol * max(w.max(), 1e-300):
        raise ReductionError("Omega_t is not positive semidefinite")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def reduce_qr(t_cov: np.ndarray) -> np.ndarray:
    """R factor of A = [w3, w1, w2] with a non-negative diagonal."""
    s = symmetric_sqrt(t_cov)
    a = s[:, [2, 0, 1]]
    _, r = np.linalg.qr(a)
    sign = np.where(np.diag(r) < 0, -1.0, 1.0)
    r = sign[:, None] * r
    if abs(r[0, 0]) < 1e-12:
        raise ReductionError("degenerate reduction: |r11| too small")
    return r


def e_xy_closed_form(t_mean, r) -> float:
    """E[t1 t2 / t3^2] by the factorized first-order expansion.

    Written multiplied out so r12 = 0 or r13 = 0 (symmetric layouts) stays finite.
    """
    m1, m2, m3 = t_mean
    r11, r12, r13 = r[0, 0], r[0, 1], r[0, 2]
    r22, r23 = r[1, 1], r[1, 2]
    c = m3 / r11
    lin = m1 * r13 + m2 * r12  # r12 r13 (m1/r12 + m2/r13)
    quad = r12 * r13
    const = m1 * m2 + r22 * r23
    return float((quad + (lin - 2 * c * quad) / c + (const + c**2 * quad - c * lin) / (1 + c**2)) / r11**2)


def e_xy_guarded(t_mean, r, guard: float = 4.0) -> float:
    """Same expectation by quadrature over the reduced variable, |u| <= min(guard, 0.9 c)."""
    m1, m2, m3 = t_mean
    r11, r12, r13 = r[0, 0], r[0, 1], r[0, 2]
    r22, r23 = r[1, 1], r[1, 2]
    half = min(guard, 0.9 * m3 / r11)

    def g(u):
        num = (m1 + r12 * u) * (m2 + r13 * u) + r22 * r23
        return num / (m3 + r11 * u) ** 2 * math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)

    val = integrate.quad(g, -half, half, limit=200)[0]
    return float(val / (ndtr(half) - ndtr(-half)))


def cross_axis_correlation(dep: Deployment, params: ChannelParams, pmin: float, sigma_l: float = 0.0,
                           moments: str = "quadrature", axis_moments=None) -> CrossAxisResult:
    """Correlation coefficient of the x and y WCL errors.

    ``axis_moments`` may pass precomputed ((m_x, s_x), (m_y, s_y)) to avoid
    recomputing the per-axis ratio moments.
    """
    mu = mu_constants(params, dep, pmin)
    omega = shadowing_omega(params, dep)
    t_mean, t_cov = t_statistics(dep, mu, omega, sigma_l)
    if not t_mean[2] > 3 * math.sqrt(t_cov[2, 2]):
        raise ReductionError("denominator not sign-definite: need m3 > 3 sigma3")
    r = reduce_qr(t_cov)

    if axis_moments is None:
        fn = ratio_moments_quadrature if moments == "quadrature" else ratio_moments_hayya
        axis_moments = []
        for k in (0, 1):
            sa = math.sqrt(t_cov[k, k])
            sb = math.sqrt(t_cov[2, 2])
            rho = t_cov[k, 2] / (sa * sb) if sa * sb > 0 else 0.0
            axis_moments.append(fn(t_mean[k], sa, t_mean[2], sb, float(np.clip(rho, -1, 1))))
    (m_x, s_x), (m_y, s_y) = axis_moments

    exy = e_xy_closed_form(t_mean, r)
    exy_g = e_xy_guarded(t_mean, r)
    denom = s_x * s_y
    if denom == 0:
        rho, rho_g = 0.0, 0.0
    else:
        rho = (exy - m_x * m_y) / denom
        rho_g = (exy_g - m_x * m_y) / denom
    clipped = abs(rho) > 1
    return CrossAxisResult(float(np.clip(rho, -1, 1)), float(np.clip(rho_g, -1, 1)), exy, exy_g,
                           m_x, m_y, s_x, s_y, t_mean, t_cov, r, clipped)
