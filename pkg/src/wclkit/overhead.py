"""Transmit power and operation counts for centralized and distributed WCL.

Power is linear (mW) internally and reported in dBm. A link of length d
needs P_r,min (d/d0)^gamma 10^(-s/10) to be received at the sensitivity
P_r,min, where s is the link's shadowing in dB.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from wclkit.rng import RngLike, as_generator

LN10_10 = math.log(10.0) / 10.0


class OverheadError(RuntimeError):
    pass


def dbm_to_mw(p):
    return 10.0 ** (np.asarray(p, float) / 10.0)


def mw_to_dbm(p):
    p = np.asarray(p, float)
    if np.any(p <= 0):
        raise ValueError("power must be positive to convert to dBm")
    return 10.0 * np.log10(p)


@dataclass(frozen=True)
class PowerModel:
    p_r_min: float = -70.0  # receiver sensitivity for control messages, dBm
    gamma: float = 3.8
    d0: float = 1.0
    sigma_s: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not self.d0 > 0:
            raise ValueError("d0 must be > 0")
        if self.sigma_s < 0:
            raise ValueError("sigma_s must be >= 0")

    @property
    def p_r_min_mw(self) -> float:
        return float(dbm_to_mw(self.p_r_min))


@dataclass(frozen=True)
class OverheadReport:
    scenario: str
    method: str
    clusters: int
    msg_count: float
    total_power_mw: float
    ops: float
    n_nodes: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def total_power_dbm(self) -> float:
        return float(mw_to_dbm(self.total_power_mw))

    @property
    def per_node_power_dbm(self) -> float:
        # "per node" is the total divided by N
        return float(mw_to_dbm(self.total_power_mw / self.n_nodes))


def link_tx_power(model: PowerModel, distance, shadow_db=0.0):
    """Minimum transmit power (mW) for a link of the given length."""
    d = np.asarray(distance, float)
    if np.any(d <= 0):
        raise ValueError("link distance must be > 0")
    out = model.p_r_min_mw * (d / model.d0) ** model.gamma * 10.0 ** (-np.asarray(shadow_db, float) / 10.0)
    return float(out) if out.ndim == 0 else out


def lognormal_factor(sigma_s: float, method: str = "closed") -> float:
    """E[10^(-s/10)] for s ~ N(0, sigma_s^2)."""
    if sigma_s < 0:
        raise ValueError("sigma_s must be >= 0")
    if method == "closed":
        return math.exp(0.5 * (sigma_s * LN10_10) ** 2)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if sigma_s == 0:
        return 1.0
    # x p(x) dx with x = exp(su v) becomes exp(su v) phi(v) dv, peaked at v = su
    su = sigma_s * LN10_10

    def integrand(v):
        return math.exp(su * v - 0.5 * v * v) / math.sqrt(2 * math.pi)

    val, err = integrate.quad(integrand, su - 40.0, su + 40.0, points=[su], limit=400,
                              epsabs=0.0, epsrel=1e-11)
    if not np.isfinite(val) or err > 1e-8 * abs(val):
        raise OverheadError(f"lognormal moment quadrature failed (error {err:.3g})")
    return float(val)


def distance_moment(R: float, gamma: float, d0: float = 1.0) -> float:
    """E[(d/d0)^gamma] for a point uniform in a disk of radius R around the receiver."""
    if not gamma > -2:
        raise ValueError("gamma must be > -2")
    return (R / d0) ** gamma / (gamma / 2.0 + 1.0)


def cwcl_expected_power(model: PowerModel, R: float, N: int, check: bool = True) -> float:
    """Mean total power (mW) of N reports to a fusion centre at the disk centre."""
    f = lognormal_factor(model.sigma_s)
    if check:
        fq = lognormal_factor(model.sigma_s, "quadrature")
        if abs(fq - f) > 1e-6 * f:
            raise OverheadError(f"lognormal moment mismatch: closed {f!r}, quadrature {fq!r}")
    return N * model.p_r_min_mw * distance_moment(R, model.gamma, model.d0) * f


def cwcl_ops(N: int) -> int:
    if N < 1:
        raise ValueError("N must be >= 1")
    return 25 * int(N)


def dwcl_message_count(M, L, K, eta):
    """(phase-one, phase-two) message counts: (M L + 2 L + 2 eta K L, 2 K)."""
    if min(M, L, K) < 0:
        raise ValueError("M, L, K must be nonnegative")
    if not 0 <= eta <= 1:
        raise ValueError("eta must be in [0, 1]")
    return M * L + 2 * L + 2 * eta * K * L, 2 * K


def dwcl_ops(N, M, L, K, eta):
    if abs(N - M * L) > 1e-9 * max(N, 1):
        raise ValueError(f"inconsistent sizes: N={N} but M*L={M * L}")
    if not 0 <= eta <= 1:
        raise ValueError("eta must be in [0, 1]")
    return (27 * N + 44 * L + 64 * K * L + eta * K * L) + (34 * K * M + 26 * M)


def inter_head_distance(cluster_radius: float) -> float:
    """Centre spacing of edge-adjacent hexagons with circumradius R_C."""
    return math.sqrt(3.0) * cluster_radius


def dwcl_expected_power(model: PowerModel, cluster_radius: float, L, M, K, eta) -> float:
    """Mean total power (mW) of one distributed run.

    Members report to their head as in the centralized case but over a disk of
    radius R_C; head-to-head messages are charged at the mean adjacent-centre
    distance. With K = 0 there is nobody to compare with, so only the reports
    remain.
    """
    f = lognormal_factor(model.sigma_s)
    pr = model.p_r_min_mw
    intra = L * M * pr * distance_moment(cluster_radius, model.gamma, model.d0) * f
    n_inter = (2 * L + 2 * eta * K * L + 2 * K) if K > 0 else 0.0
    inter = n_inter * link_tx_power(model, inter_head_distance(cluster_radius)) * f
    return float(intra + inter)


def ledger_power(model: PowerModel, ledger, rng: RngLike) -> float:
    """Sum of link powers over ledger entries, each link with fresh shadowing."""
    d = ledger.distances() if hasattr(ledger, "distances") else np.asarray(ledger, float)
    if d.size == 0:
        return 0.0
    s = as_generator(rng).normal(0.0, model.sigma_s, d.size) if model.sigma_s > 0 else np.zeros(d.size)
    return float(np.sum(link_tx_power(model, d, s)))


def cwcl_link_distances(positions, center=(0.0, 0.0)) -> np.ndarray:
    """Report distances from every node to a fusion centre."""
    pts = np.atleast_2d(np.asarray(positions, float))
    return np.hypot(*(pts - np.asarray(center, float)).T)


def dwcl_counts(cluster_set, result=None) -> dict:
    """Realized M, L, K and eta of a clustered run."""
    active = cluster_set.active
    L = len(active)
    n = sum(cluster_set[i].members.size for i in active)
    K = max((len(cluster_set.neighbors(i)) for i in active), default=0)
    eta = result.eta if result is not None else 0.0
    return {"N": n, "M": n / L if L else 0.0, "L": L, "K": K, "eta": eta}


REPORT_FIELDS = ["scenario", "method", "clusters", "msg_count", "total_power_dbm", "per_node_power_dbm", "ops"]


def write_report_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_FIELDS)
        for r in reports:
            w.writerow([r.scenario, r.method, r.clusters, repr(float(r.msg_count)),
                        repr(r.total_power_dbm), repr(r.per_node_power_dbm), repr(float(r.ops))])
