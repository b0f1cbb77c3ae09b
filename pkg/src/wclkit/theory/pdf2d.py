"""Density of the 2-D error norm for a bivariate normal error vector."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gammaln, ive, logsumexp

MIN_GRID = 4096
SERIES_CAP = 400
SERIES_RTOL = 1e-12


class PdfError(RuntimeError):
    pass


@dataclass(frozen=True)
class ErrorCovariance2D:
    omega_L: np.ndarray
    rho_xy: float
    m_x: float  # decorrelated means and stds
    m_y: float
    sigma_x: float
    sigma_y: float
    q: np.ndarray


@dataclass(frozen=True)
class ErrorPdf:
    grid: np.ndarray
    density: np.ndarray
    mean: float
    std: float
    method: str
    decorrelated: ErrorCovariance2D | None = None

    def cdf(self, x) -> np.ndarray:
        c = np.concatenate([[0.0], np.cumsum(np.diff(self.grid) * 0.5 * (self.density[1:] + self.density[:-1]))])
        return np.interp(x, self.grid, c / c[-1])


def decorrelate(mean_xy, sigma_x: float, sigma_y: float, rho_xy: float) -> ErrorCovariance2D:
    """Rotate onto the eigenbasis of Omega_L: e' = Q e with Q Omega_L Q^T diagonal."""
    cov = rho_xy * sigma_x * sigma_y
    omega = np.array([[sigma_x**2, cov], [cov, sigma_y**2]])
    w, v = np.linalg.eigh(omega)
    if w.min() < -1e-12 * max(w.max(), 1e-300):
        raise PdfError("Omega_L is not positive semidefinite")
    q = v.T
    m = q @ np.asarray(mean_xy, float)
    s = np.sqrt(np.clip(w, 0.0, None))
    return ErrorCovariance2D(omega, float(rho_xy), float(m[0]), float(m[1]), float(s[0]), float(s[1]), q)


def _series_coefficients(a: float, b: float, n_max: int):
    """log|c_n| and sign(c_n) for c_n = Gamma(n+1/2) sum_l a^l b^(n-l) / ((n-l)! l! Gamma(l+1/2)).

    The noncentral-chi double sum has A = a x and B = b x, so grouping by n = i + l
    turns it into a single series in x^n I_n(k x).
    """
    n = np.arange(n_max + 1)
    log_c = np.empty(n_max + 1)
    sign_c = np.empty(n_max + 1)
    la = math.log(abs(a)) if a != 0 else -np.inf
    lb = math.log(abs(b)) if b != 0 else -np.inf
    for k in n:
        l = np.arange(k + 1)
        with np.errstate(invalid="ignore"):
            lt = np.where(l > 0, l * la, 0.0) + np.where(k - l > 0, (k - l) * lb, 0.0)
        lt = lt - gammaln(k - l + 1) - gammaln(l + 1) - gammaln(l + 0.5)
        sg = np.where((a < 0) & (l % 2 == 1), -1.0, 1.0) * np.where((b < 0) & ((k - l) % 2 == 1), -1.0, 1.0)
        val, s = logsumexp(lt, b=sg, return_sign=True)
        log_c[k] = val + gammaln(k + 0.5)
        sign_c[k] = s
    return log_c, sign_c


def _series_density(x: np.ndarray, mx, my, sx, sy, block: int = 25):
    """Series form of the error-norm density, evaluated in the log domain; None when it does not converge by the cap."""
    mx, my = abs(mx), abs(my)  # the norm does not see the sign of either mean
    a = my**2 * sx**2 / (2 * mx * sy**4)
    b = (sy**2 - sx**2) / (mx * sy**2)
    k = mx / sx**2
    log_c, sign_c = _series_coefficients(a, b, SERIES_CAP)

    xs = x[x > 0]
    logx = np.log(xs)
    z = k * xs
    # log I_n(z) = log ive(n, z) + z; the common e^z goes into the prefactor
    log_terms, signs = [], []
    converged = False
    for start in range(0, SERIES_CAP + 1, block):
        n = np.arange(start, min(start + block, SERIES_CAP + 1))
        with np.errstate(divide="ignore"):
            lt = log_c[n, None] + n[:, None] * logx[None, :] + np.log(ive(n[:, None], z[None, :]))
        log_terms.append(lt)
        signs.append(np.broadcast_to(sign_c[n, None], lt.shape))
        all_lt = np.concatenate(log_terms)
        total, _ = logsumexp(all_lt, axis=0, b=np.concatenate(signs), return_sign=True)
        peak = all_lt.max(axis=0)
        last = lt[-1]
        if np.all((last - np.maximum(total, peak) < math.log(SERIES_RTOL)) & (last < peak)):
            converged = True
            break
    if not converged:
        return None
    log_sum, sgn = logsumexp(np.concatenate(log_terms), axis=0, b=np.concatenate(signs), return_sign=True)
    log_pref = logx - math.log(sx * sy) - xs**2 / (2 * sx**2) - 0.5 * (mx**2 / sx**2 + my**2 / sy**2) + z
    with np.errstate(over="ignore"):
        vals = sgn * np.exp(log_sum + log_pref)
    if not np.all(np.isfinite(vals)):
        return None
    out = np.zeros_like(x)
    out[x > 0] = vals
    return out


def _polar_density(x: np.ndarray, mx, my, sx, sy):
    """Convolution of the two 1-dof noncentral chi-square laws, then v -> v^2.

    With s = u sin^2(phi) the convolution f_U(u) = int f_X2(s) f_Y2(u - s) ds
    loses both endpoint singularities, and f_V(v) = 2 v f_U(v^2) becomes
    v * int_0^{pi/2} g_x(v sin phi) g_y(v cos phi) dphi with
    g(r) = [phi((r - m)/s) + phi((r + m)/s)] / s.
    """
    smin = max(min(sx, sy), 1e-300)
    n_nodes = int(min(max(256, math.ceil(12 * x.max() / smin)), 20000))
    nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
    phi = (nodes + 1) * (math.pi / 4)
    wts = wts * (math.pi / 4)
    sin, cos = np.sin(phi), np.cos(phi)
    out = np.empty_like(x)
    chunk = max(1, 2_000_000 // n_nodes)
    for i in range(0, len(x), chunk):
        v = x[i:i + chunk, None]
        out[i:i + chunk] = v[:, 0] * ((_folded(v * sin, mx, sx) * _folded(v * cos, my, sy)) @ wts)
    return out


def _folded(r, m, s):
    return (np.exp(-0.5 * ((r - m) / s) ** 2) + np.exp(-0.5 * ((r + m) / s) ** 2)) / (s * math.sqrt(2 * math.pi))


def _moments(grid, dens):
    mass = trapezoid(dens, grid)
    mean = trapezoid(grid * dens, grid) / mass
    var = trapezoid((grid - mean) ** 2 * dens, grid) / mass
    return float(mass), float(mean), float(math.sqrt(max(var, 0.0)))


def norm_density(mx, my, sx, sy, method: str = "auto", n_grid: int = MIN_GRID, grid=None) -> ErrorPdf:
    """Density of sqrt(X^2 + Y^2) for independent X ~ N(mx, sx^2), Y ~ N(my, sy^2)."""
    if sx <= 0 or sy <= 0:
        raise PdfError("both decorrelated standard deviations must be positive")
    if grid is None:
        top = math.hypot(mx, my) + 12 * max(sx, sy)
        grid = np.linspace(0.0, top, max(n_grid, MIN_GRID))
    grid = np.asarray(grid, float)

    tried = []
    if method in ("auto", "series"):
        # label the axes so the series sees a nonzero x-mean, preferring sy >= sx
        candidates = [(mx, my, sx, sy), (my, mx, sy, sx)]
        candidates.sort(key=lambda c: (abs(c[0]) < 1e-6 * c[2], c[3] < c[2]))
        for cx, cy, csx, csy in candidates:
            if abs(cx) < 1e-6 * csx:
                continue
            if method == "auto" and abs(csx - csy) <= 1e-9 * max(csx, csy):
                break
            dens = _series_density(grid, cx, cy, csx, csy)
            if dens is not None and np.all(dens >= -1e-12):
                mass, mean, std = _moments(grid, dens)
                if abs(mass - 1) <= 1e-3:
                    return ErrorPdf(grid, np.clip(dens, 0, None), mean, std, "series")
                tried.append(f"series mass {mass:.6f}")
            else:
                tried.append("series did not converge")
            break
        if method == "series":
            raise PdfError("series path failed: " + "; ".join(tried or ["zero mean on both axes"]))

    dens = _polar_density(grid, mx, my, sx, sy)
    mass, mean, std = _moments(grid, dens)
    if abs(mass - 1) > 1e-3:
        tried.append(f"convolution mass {mass:.6f}")
        raise PdfError("error pdf failed normalization: " + "; ".join(tried))
    return ErrorPdf(grid, dens, mean, std, "convolution")


def error_2d_distribution(axis_x, axis_y, rho_xy: float, method: str = "auto", n_grid: int = MIN_GRID) -> ErrorPdf:
    """Pdf of the error norm given per-axis error moments and their correlation.

    ``axis_x``/``axis_y`` are AxisErrorStats or (mean, std) pairs.
    """
    mx, sx = _pair(axis_x)
    my, sy = _pair(axis_y)
    dc = decorrelate([mx, my], sx, sy, rho_xy)
    pdf = norm_density(dc.m_x, dc.m_y, dc.sigma_x, dc.sigma_y, method=method, n_grid=n_grid)
    return ErrorPdf(pdf.grid, pdf.density, pdf.mean, pdf.std, pdf.method, dc)


def _pair(stats):
    if hasattr(stats, "m_hat"):
        return float(stats.m_hat), float(stats.sigma_hat)
    m, s = stats
    return float(m), float(s)
