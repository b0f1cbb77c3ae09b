"""WCL, its participation filters, the three baselines, and the error metric."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from wclkit.channel import ChannelParams, RssRealization, mean_received_power
from wclkit.placement import Deployment

# one-sided 1% standard normal quantile
MARGIN_1PCT = 2.33


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class WclConfig:
    pmin_policy: str = "border_quantile"  # or "fixed", "participant_min"
    pmin_dbm: float | None = None
    margin_sigmas: float = MARGIN_1PCT
    participation_fraction: float = 1.0
    participation_rule: str = "fraction"  # or "relative_span"
    relative_span: float = 0.15

    def __post_init__(self):
        if self.pmin_policy not in ("border_quantile", "fixed", "participant_min"):
            raise ValueError(f"unknown P_min policy {self.pmin_policy!r}")
        if self.pmin_policy == "fixed" and self.pmin_dbm is None:
            raise ValueError("fixed P_min policy needs pmin_dbm")
        if self.margin_sigmas < 0:
            raise ValueError("margin_sigmas must be >= 0")
        if not 0 < self.participation_fraction <= 1:
            raise ValueError("participation fraction must be in (0, 1]")
        if self.participation_rule not in ("fraction", "relative_span"):
            raise ValueError(f"unknown participation rule {self.participation_rule!r}")


@dataclass(frozen=True)
class Estimate:
    position: np.ndarray
    participants: np.ndarray
    weights: np.ndarray


def compute_pmin(params: ChannelParams, R: float, cfg: WclConfig) -> float:
    """Power floor: a constant, or the border mean power minus a shadowing margin.

    The "participant_min" policy depends on the measurements; use
    :func:`participant_floor` for it.
    """
    if cfg.pmin_policy == "participant_min":
        raise ValueError("participant_min floor needs the measured powers: use participant_floor")
    if cfg.pmin_policy == "fixed":
        return float(cfg.pmin_dbm)
    return mean_received_power(params, R) - cfg.margin_sigmas * params.sigma_s


def weighted_centroid(positions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Batched weighted mean; positions ``(..., N, 2)``, weights ``(..., N)``."""
    w = np.asarray(weights, float)
    if w.ndim == 1:
        # exactly rounded sums, so mirror-symmetric layouts cancel to an exact zero
        pos = np.asarray(positions, float)
        sw = math.fsum(w)
        return np.array([math.fsum(w * pos[:, 0]) / sw, math.fsum(w * pos[:, 1]) / sw])
    return np.einsum("...n,...nk->...k", w, positions) / w.sum(axis=-1)[..., None]


def participant_floor(rss: RssRealization, candidates=None) -> float:
    """Relative-span floor: the weakest participant's power (that node gets zero weight)."""
    p = rss.powers if candidates is None else rss.powers[np.asarray(candidates, dtype=int)]
    if p.size == 0:
        raise EstimationError("no participants")
    return float(p.min())


def wcl_weights(powers, pmin: float) -> np.ndarray:
    """Relative-span weights in dB, clamped at zero."""
    return np.maximum(np.asarray(powers, float) - pmin, 0.0)


def wcl_estimate(dep: Deployment, rss: RssRealization, pmin: float, candidates=None) -> Estimate:
    """Weighted centroid of measured positions with weights P_i - P_min.

    ``candidates`` restricts the node set (participation filter, coverage).
    Nodes at or below the floor get weight zero and are dropped.
    """
    ids = np.arange(dep.n) if candidates is None else np.asarray(candidates, dtype=int)
    w = wcl_weights(rss.powers[ids], pmin)
    keep = w > 0
    if not np.any(keep):
        raise EstimationError("no node above P_min")
    ids, w = ids[keep], w[keep]
    pos = weighted_centroid(dep.measured_positions[ids], w)
    return Estimate(pos, ids, w)


def _participant_count(fraction: float, n: int) -> int:
    # round first so 0.3 * 10 does not ceil to 4
    return max(1, math.ceil(round(fraction * n, 9)))


def select_participants(rss: RssRealization, fraction: float, candidates=None) -> np.ndarray:
    """The ceil(fraction * N) strongest nodes; ties go to the lower id."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    ids = np.arange(len(rss.powers)) if candidates is None else np.asarray(candidates, dtype=int)
    order = np.lexsort((ids, -rss.powers[ids]))
    k = _participant_count(fraction, len(ids))
    return np.sort(ids[order[:k]])


def select_relative_span(rss: RssRealization, span: float = 0.15, candidates=None) -> np.ndarray:
    """Nodes whose linear received power is within ``span`` of the strongest node's."""
    ids = np.arange(len(rss.powers)) if candidates is None else np.asarray(candidates, dtype=int)
    p = rss.powers[ids]
    floor = p.max() + 10.0 * math.log10(1.0 - span)
    return ids[p >= floor]


def participants_for(cfg: WclConfig, rss: RssRealization, candidates=None) -> np.ndarray:
    if cfg.participation_rule == "relative_span":
        return select_relative_span(rss, cfg.relative_span, candidates)
    return select_participants(rss, cfg.participation_fraction, candidates)


def centroid_estimate(dep: Deployment, in_range) -> Estimate:
    ids = np.asarray(in_range, dtype=int).ravel()
    if ids.size == 0:
        raise EstimationError("centroid needs at least one node in range")
    w = np.ones(ids.size)
    return Estimate(dep.measured_positions[ids].mean(axis=0), ids, w)


def strongest_node_estimate(dep: Deployment, rss: RssRealization, candidates=None) -> Estimate:
    ids = np.arange(dep.n) if candidates is None else np.asarray(candidates, dtype=int)
    if ids.size == 0:
        raise EstimationError("strongest node needs at least one node")
    # argmax returns the first maximum; ids are ascending
    ids = np.sort(ids)
    best = ids[int(np.argmax(rss.powers[ids]))]
    return Estimate(dep.measured_positions[best].copy(), np.array([best]), np.ones(1))


def range_estimates(params: ChannelParams, powers) -> np.ndarray:
    """Invert the mean path loss: d = d0 * 10^((P0 - P) / (10 gamma))."""
    return params.d0 * 10.0 ** ((params.p0 - np.asarray(powers, float)) / (10.0 * params.gamma))


def laterate(positions: np.ndarray, ranges: np.ndarray, rcond: float = 1e-10) -> np.ndarray:
    """Linearized least squares, subtracting the first node's circle equation."""
    p = np.asarray(positions, float)
    d = np.asarray(ranges, float)
    if len(p) < 3:
        raise EstimationError("lateration needs at least 3 nodes")
    a = 2.0 * (p[1:] - p[0])
    b = d[0] ** 2 - d[1:] ** 2 + np.sum(p[1:] ** 2, axis=1) - np.sum(p[0] ** 2)
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= rcond * s[0]:
        raise EstimationError("degenerate geometry")
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    return sol


def lateration_estimate(dep: Deployment, rss: RssRealization, params: ChannelParams,
                        candidates=None) -> Estimate:
    ids = np.arange(dep.n) if candidates is None else np.asarray(candidates, dtype=int)
    pos = laterate(dep.measured_positions[ids], range_estimates(params, rss.powers[ids]))
    return Estimate(pos, ids, np.ones(ids.size))


def localization_error(est, pu) -> float:
    pos = est.position if isinstance(est, Estimate) else np.asarray(est, float)
    return float(np.hypot(*(pos - np.asarray(pu, float))))


ESTIMATE_FIELDS = ["trial", "method", "est_x", "est_y", "error_m", "error_over_D"]


def write_estimates_csv(rows, path) -> None:
    """``rows``: iterable of (trial, method, Estimate, pu, D)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ESTIMATE_FIELDS)
        for trial, method, est, pu, D in rows:
            err = localization_error(est, pu)
            w.writerow([trial, method, repr(float(est.position[0])), repr(float(est.position[1])),
                        repr(err), repr(err / D)])
