"""Log-distance path loss with i.i.d. or spatially correlated log-normal shadowing."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from wclkit.placement import Deployment
from wclkit.rng import RngLike, as_generator


class CovarianceRegularizedWarning(RuntimeWarning):
    """The shadowing covariance needed diagonal jitter before factorization."""


@dataclass(frozen=True)
class ChannelParams:
    p0: float = 0.0  # dBm at d0
    d0: float = 1.0
    gamma: float = 3.8
    sigma_s: float = 4.0  # dB
    x_c: float | None = None
    shadowing_mode: str = "iid"
    doi: float = 0.0
    doi_ar: float = 0.95  # angular AR(1) coefficient per 1 degree step

    def __post_init__(self):
        if self.d0 <= 0:
            raise ValueError("d0 must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.sigma_s < 0:
            raise ValueError("sigma_s must be >= 0")
        if self.shadowing_mode not in ("iid", "correlated"):
            raise ValueError(f"unknown shadowing mode {self.shadowing_mode!r}")
        if self.shadowing_mode == "correlated" and not (self.x_c is not None and self.x_c > 0):
            raise ValueError("correlated shadowing needs x_c > 0")
        if not 0 <= self.doi < 1:
            raise ValueError("doi must be in [0, 1)")
        if not 0 <= self.doi_ar < 1:
            raise ValueError("doi_ar must be in [0, 1)")

    @property
    def correlated(self) -> bool:
        return self.shadowing_mode == "correlated"


@dataclass(frozen=True)
class RssRealization:
    powers: np.ndarray  # dBm
    shadowing: np.ndarray  # dB

    @property
    def path_loss_term(self) -> np.ndarray:
        return self.powers - self.shadowing


@dataclass(frozen=True)
class CoverageMask:
    covered: np.ndarray
    radius: np.ndarray  # r(theta) on the angular lattice, metres
    angles: np.ndarray  # radians, same length as radius

    def radius_at(self, theta) -> np.ndarray:
        n = len(self.radius)
        idx = np.rint(np.mod(theta, 2 * np.pi) / (2 * np.pi) * n).astype(int) % n
        return self.radius[idx]


def mean_received_power(params: ChannelParams, distance):
    """P0 - 10 gamma log10(d / d0), no shadowing. Accepts scalars or arrays."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("undefined path loss at zero distance")
    out = params.p0 - 10.0 * params.gamma * np.log10(d / params.d0)
    return float(out) if out.ndim == 0 else out


def correlation_matrix(positions: np.ndarray, x_c: float) -> np.ndarray:
    """Exponential correlation exp(-|Li - Lj| / x_c)."""
    if not x_c > 0:
        raise ValueError("x_c must be positive")
    pos = np.asarray(positions, float).reshape(-1, 2)
    return np.exp(-cdist(pos, pos) / x_c)


def shadowing_covariance(positions, sigma_s: float, x_c: float) -> np.ndarray:
    return sigma_s**2 * correlation_matrix(positions, x_c)


def shadowing_factor(params: ChannelParams, positions) -> np.ndarray | None:
    """Lower-triangular factor L with L L^T = Omega_s, or None for i.i.d. shadowing."""
    if not params.correlated or params.sigma_s == 0:
        return None
    return _factor(shadowing_covariance(positions, params.sigma_s, params.x_c), params.sigma_s)


def _factor(cov: np.ndarray, sigma_s: float) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    warnings.warn("covariance regularized", CovarianceRegularizedWarning, stacklevel=3)
    jittered = cov + 1e-9 * sigma_s**2 * np.eye(len(cov))
    try:
        return np.linalg.cholesky(jittered)
    except np.linalg.LinAlgError:
        # symmetric eigen-factor with clipped spectrum
        w, v = np.linalg.eigh(jittered)
        return v * np.sqrt(np.clip(w, 0.0, None))


def sample_shadowing(params: ChannelParams, positions, rng: RngLike, size: int | None = None,
                     factor: np.ndarray | None = None) -> np.ndarray:
    """Draw shadowing in dB; shape ``(N,)`` or ``(size, N)``.

    ``factor`` may carry a precomputed :func:`shadowing_factor` so repeated
    draws over one fixed deployment skip the factorization.
    """
    n = np.asarray(positions).reshape(-1, 2).shape[0]
    shape = (n,) if size is None else (size, n)
    if params.sigma_s == 0:
        return np.zeros(shape)
    gen = as_generator(rng)
    if not params.correlated:
        return gen.normal(0.0, params.sigma_s, size=shape)
    if factor is None:
        factor = shadowing_factor(params, positions)
    z = gen.standard_normal(shape)
    return z @ factor.T


def sample_rss(params: ChannelParams, dep: Deployment, rng: RngLike,
               factor: np.ndarray | None = None) -> RssRealization:
    d = dep.true_distances()
    if np.any(d <= 0):
        raise ValueError("PU coincides with a sensor node: undefined path loss at zero distance")
    mean = mean_received_power(params, d)
    s = sample_shadowing(params, dep.true_positions, rng, factor=factor)
    return RssRealization(mean + s, s)


def _circular_ar1(n: int, coeff: float, gen: np.random.Generator) -> np.ndarray:
    """Unit-variance stationary AR(1) process on a cycle of n samples.

    Solves x_k = coeff * x_{k-1 mod n} + e_k exactly in the Fourier domain, so
    the pair (x_{n-1}, x_0) is correlated like any other adjacent pair.
    """
    if coeff == 0:
        return gen.standard_normal(n)
    transfer = 1.0 / (1.0 - coeff * np.exp(-2j * np.pi * np.arange(n) / n))
    x = np.fft.ifft(np.fft.fft(gen.standard_normal(n)) * transfer).real
    return x / math.sqrt(np.mean(np.abs(transfer) ** 2))


def circular_ar1_lag1(n: int, coeff: float) -> float:
    """Correlation of adjacent samples of :func:`_circular_ar1`."""
    return (coeff + coeff ** (n - 1)) / (1.0 + coeff**n)


def sample_coverage(doi: float, R: float, dep: Deployment, rng: RngLike,
                    ar_coeff: float = 0.95, n_angles: int = 360) -> CoverageMask:
    """Irregular transmission range r(theta) = R + R*doi*g(theta), g a circular AR(1)."""
    if not 0 <= doi < 1:
        raise ValueError("doi must be in [0, 1)")
    angles = 2 * np.pi * np.arange(n_angles) / n_angles
    if doi == 0:
        radius = np.full(n_angles, float(R))
    else:
        g = _circular_ar1(n_angles, ar_coeff, as_generator(rng))
        radius = np.clip(R + R * doi * g, 0.0, None)
    rel = dep.true_positions - dep.pu_position
    mask = CoverageMask(np.zeros(dep.n, bool), radius, angles)
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    covered = np.hypot(rel[:, 0], rel[:, 1]) <= mask.radius_at(theta)
    return CoverageMask(covered, radius, angles)


def write_rss_csv(rss: RssRealization, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "power_dbm", "shadow_db"])
        for i, (p, s) in enumerate(zip(rss.powers, rss.shadowing)):
            w.writerow([i, repr(float(p)), repr(float(s))])


def read_rss_csv(path) -> RssRealization:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["id"]))
    return RssRealization(np.array([float(r["power_dbm"]) for r in rows]),
                          np.array([float(r["shadow_db"]) for r in rows]))
