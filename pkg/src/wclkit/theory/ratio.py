"""Mean and spread of the ratio a/b of two correlated Gaussians."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import ndtr


class RatioDomainError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


def ratio_moments_hayya(m_a, sigma_a, m_b, sigma_b, rho_ab):
    """Second-order (normal) approximation of the mean and std of a/b."""
    if m_b == 0:
        raise RatioDomainError("m_b must be nonzero")
    mean = m_a / m_b + sigma_b**2 * m_a / m_b**3 - rho_ab * sigma_a * sigma_b / m_b**2
    var = (sigma_b**2 * m_a**2 / m_b**4 + sigma_a**2 / m_b**2
           - 2 * rho_ab * sigma_a * sigma_b * m_a / m_b**3)
    return float(mean), float(math.sqrt(max(var, 0.0)))


def ratio_pdf(z, m_a, sigma_a, m_b, sigma_b, rho_ab):
    """Density of a/b, f(z) = int |t| phi2(z t, t) dt, with the t-integral done in closed form.

    Along the line (z t, t) the bivariate normal exponent is quadratic in t.
    Its minimum is (m_a - z m_b)^2 / W with W = Var(a - z b), and the
    remaining factor is E|T| for a normal T, so

        f(z) = phi((m_a - z m_b) / sqrt(W)) / sqrt(W) * E|T|.
    """
    z = np.asarray(z, float)
    sa, sb, r = sigma_a, sigma_b, rho_ab
    w = sa**2 - 2 * r * z * sa * sb + z**2 * sb**2
    one_r2 = 1.0 - r**2
    # T ~ N(mu_t, s_t^2) is the conditional law of b on the line
    s_t = sa * sb * np.sqrt(one_r2 / w)
    mu_t = (z * (m_a * sb**2 - r * sa * sb * m_b) + m_b * sa**2 - r * sa * sb * m_a) / w
    abs_mean = s_t * math.sqrt(2 / math.pi) * np.exp(-0.5 * (mu_t / s_t) ** 2) + mu_t * (1 - 2 * ndtr(-mu_t / s_t))
    return np.exp(-0.5 * (m_a - z * m_b) ** 2 / w) / np.sqrt(2 * math.pi * w) * abs_mean


def _conditional_moments(m_a, sigma_a, m_b, sigma_b, rho_ab, half_width):
    """Moments by integrating over b, for degenerate (|rho|=1 or sigma_a=0) inputs."""
    slope = rho_ab * sigma_a / sigma_b
    cvar = sigma_a**2 * max(1.0 - rho_ab**2, 0.0)
    lo = m_b - min(half_width, 0.9 * m_b / sigma_b) * sigma_b
    hi = m_b + half_width * sigma_b

    def phi(b):
        return math.exp(-0.5 * ((b - m_b) / sigma_b) ** 2)

    def ez(b, k):
        ca = m_a + slope * (b - m_b)
        return (ca / b if k == 1 else (cvar + ca**2) / b**2) * phi(b)

    i0 = integrate.quad(phi, lo, hi, limit=200)[0]
    i1 = integrate.quad(ez, lo, hi, args=(1,), limit=200)[0]
    i2 = integrate.quad(ez, lo, hi, args=(2,), limit=200)[0]
    mean = i1 / i0
    return mean, math.sqrt(max(i2 / i0 - mean**2, 0.0))


def ratio_moments_quadrature(m_a, sigma_a, m_b, sigma_b, rho_ab, half_width: float = 12.0,
                             rtol: float = 1e-8):
    """Mean and std of a/b by adaptive quadrature of its exact density.

    The z-window is the Hayya mean +/- ``half_width`` Hayya stds; moments are
    those of the density restricted to that window.
    """
    if not m_b > 3 * sigma_b:
        raise RatioDomainError("denominator not sign-definite: need m_b > 3 sigma_b")
    if sigma_b == 0:
        return float(m_a / m_b), float(abs(sigma_a / m_b))
    if sigma_a == 0 or 1.0 - rho_ab**2 < 1e-12:
        return _conditional_moments(m_a, sigma_a, m_b, sigma_b, rho_ab, half_width)

    m_h, s_h = ratio_moments_hayya(m_a, sigma_a, m_b, sigma_b, rho_ab)
    s_h = max(s_h, 1e-300)
    args = (m_a, sigma_a, m_b, sigma_b, rho_ab)

    # standardized variable u = (z - m_h) / s_h keeps every moment O(1)
    def f(u, k):
        return u**k * s_h * float(ratio_pdf(m_h + s_h * u, *args))

    out = []
    for k in range(3):
        val, err = integrate.quad(f, -half_width, half_width, args=(k,), points=[0.0], limit=400,
                                  epsabs=1e-11, epsrel=rtol)
        if not np.isfinite(val) or err > 1e-7:
            raise QuadratureError(f"ratio moment {k} did not converge (achieved abs error {err:.3g})")
        out.append(val)
    i0, i1, i2 = out
    mean_u = i1 / i0
    var_u = i2 / i0 - mean_u**2
    return float(m_h + s_h * mean_u), float(s_h * math.sqrt(max(var_u, 0.0)))
