"""Monte Carlo orchestration for simulation, theory and overhead experiments."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from wclkit import rng as streams
from wclkit.channel import ChannelParams, sample_coverage, sample_rss, shadowing_factor
from wclkit.dwcl import DwclConfig, ProtocolError, build_hex_clusters, run_dwcl
from wclkit.estimators import (
    EstimationError,
    WclConfig,
    centroid_estimate,
    compute_pmin,
    lateration_estimate,
    localization_error,
    participant_floor,
    select_participants,
    strongest_node_estimate,
    wcl_estimate,
)
from wclkit.harness.config import ExperimentConfig
from wclkit.overhead import (
    OverheadReport,
    PowerModel,
    cwcl_expected_power,
    cwcl_link_distances,
    cwcl_ops,
    dwcl_counts,
    dwcl_expected_power,
    dwcl_message_count,
    dwcl_ops,
    ledger_power,
)
from wclkit.placement import (
    Deployment,
    apply_position_noise,
    place_fixed_grid,
    place_random_grid,
    place_uniform_disk,
    place_uniform_square,
)
from wclkit.rng import Rng
from wclkit.theory import analyze_deployment, average_over_placements

log = logging.getLogger(__name__)

FAILURE_BUDGET = 0.01
DOI_REACH = 3.0  # nodes are deployed out to R (1 + 3 doi) so the coverage edge is inside the field
HEX_AREA = 1.5 * math.sqrt(3.0)  # hexagon area / circumradius^2


class HarnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    method: str
    N: int
    sigma_s: float
    x_c_over_D: float
    sigma_l: float
    doi: float
    participation: float
    mean_err_m: float
    mean_err_over_D: float
    std_err: float  # standard error of mean_err_m
    trials: int
    std_m: float = 0.0
    skipped: int = 0
    meta: dict = field(default_factory=dict, compare=False)


def channel_params(cfg: ExperimentConfig, D: float) -> ChannelParams:
    ch = cfg.channel
    x_c = ch.correlation_distance(D)
    if x_c > 0:
        return ChannelParams(ch.p0, ch.d0, ch.gamma, ch.sigma_s, x_c, "correlated")
    return ChannelParams(ch.p0, ch.d0, ch.gamma, ch.sigma_s)


def nominal_spacing(cfg: ExperimentConfig) -> float:
    """D of the configured deployment (fixed grids use their realized count)."""
    dep = cfg.deployment
    if dep.kind in ("fixed_grid", "random_grid"):
        g = place_fixed_grid(dep.R, dep.n, dep.area)
        return math.sqrt(g.area.measure / g.n)
    area = math.pi * dep.R**2 if dep.kind == "uniform_disk" else (2 * dep.R) ** 2
    return math.sqrt(area / dep.n)


def _uniform_pu(dep_spec, gen) -> np.ndarray:
    R = dep_spec.R
    if dep_spec.kind == "uniform_square" or dep_spec.area == "square":
        return gen.uniform(-R, R, 2)
    r, th = R * math.sqrt(gen.random()), 2 * math.pi * gen.random()
    return np.array([r * math.cos(th), r * math.sin(th)])


class _TrialFactory:
    """Draws one trial's deployment; caches what does not change across trials."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        spec = cfg.deployment
        self.D = nominal_spacing(cfg)
        self.params = channel_params(cfg, self.D)
        self.fixed_nodes = spec.kind in ("fixed_grid", "random_grid")
        self.base = place_fixed_grid(spec.R, spec.n, spec.area) if self.fixed_nodes else None
        self.factor = None
        if self.fixed_nodes and self.params.correlated:
            self.factor = shadowing_factor(self.params, self.base.true_positions)
        doi = cfg.channel.doi
        self.deploy_R = spec.R * (1 + DOI_REACH * doi) if spec.kind == "uniform_disk" else spec.R
        self.deploy_n = int(round(spec.n * (self.deploy_R / spec.R) ** 2))

    def draw(self, r: Rng) -> Deployment:
        spec = self.cfg.deployment
        gen = r.child(streams.PLACEMENT).generator()
        if spec.kind == "fixed_grid":
            dep = self.base
        elif spec.kind == "random_grid":
            dep = place_random_grid(spec.R, spec.n, gen, spec.area)
        elif spec.kind == "uniform_disk":
            dep = place_uniform_disk(self.deploy_R, self.deploy_n, gen)
        else:
            dep = place_uniform_square(spec.R, spec.n, gen)
        if spec.pu == "uniform":
            dep = dep.with_pu(_uniform_pu(spec, gen))
        elif spec.kind != "random_grid":
            dep = dep.with_pu(spec.pu)
        if spec.sigma_l > 0:
            dep = apply_position_noise(dep, spec.sigma_l, r.child(streams.POSITION_NOISE))
        return dep


def _estimate(cfg, dep, rss, candidates, pmin, params):
    est = cfg.estimator
    if est.method == "cwcl":
        if est.participation < 1:
            candidates = select_participants(rss, est.participation, candidates)
        if pmin is None:
            pmin = participant_floor(rss, candidates)
        return wcl_estimate(dep, rss, pmin, candidates)
    if est.method == "centroid":
        if candidates is None:
            # without DOI the PU range is a plain disk of radius range_R
            candidates = np.flatnonzero(dep.true_distances() <= est.range_R)
        return centroid_estimate(dep, candidates)
    if est.method == "sn":
        return strongest_node_estimate(dep, rss, candidates)
    if est.method == "lateration":
        return lateration_estimate(dep, rss, params, candidates)
    dcfg = DwclConfig(est.cluster_radius, est.threshold, est.aggregate)
    sub = dep if candidates is None else dep.subset(candidates)
    sub_rss = rss if candidates is None else type(rss)(rss.powers[candidates], rss.shadowing[candidates])
    return run_dwcl(sub, sub_rss, dcfg).estimate


def pmin_for(cfg: ExperimentConfig, params: ChannelParams) -> float | None:
    """Static floor, or None when it is taken per trial from the participants."""
    est = cfg.estimator
    if est.pmin_policy == "participant_min":
        return None
    wc = WclConfig(pmin_policy=est.pmin_policy, pmin_dbm=est.pmin_dbm, margin_sigmas=est.margin_sigmas)
    return compute_pmin(params, est.range_R, wc)


def run_trials(cfg: ExperimentConfig) -> tuple:
    """Per-trial errors in metres (skipped trials omitted), skipped count and D."""
    fac = _TrialFactory(cfg)
    params = fac.params
    pmin = pmin_for(cfg, params)
    doi = cfg.channel.doi
    errs, skipped = [], 0
    root = Rng(cfg.seed, cfg.point)
    for t in range(cfg.trials):
        r = root.child(t)
        dep = fac.draw(r)
        rss = sample_rss(params, dep, r.child(streams.SHADOWING), factor=fac.factor)
        candidates = None
        if doi > 0:
            mask = sample_coverage(doi, cfg.deployment.R, dep, r.child(streams.COVERAGE),
                                   ar_coeff=cfg.channel.doi_ar)
            candidates = np.flatnonzero(mask.covered)
            if candidates.size == 0:
                skipped += 1
                log.info("%s trial %d skipped: no node covered", cfg.scenario, t)
                continue
        try:
            est = _estimate(cfg, dep, rss, candidates, pmin, params)
        except (EstimationError, ProtocolError) as exc:
            skipped += 1
            log.info("%s trial %d skipped: %s", cfg.scenario, t, exc)
            continue
        errs.append(localization_error(est, dep.pu_position))
    if skipped > FAILURE_BUDGET * cfg.trials:
        raise HarnessError(f"{cfg.scenario}: {skipped} of {cfg.trials} trials failed (budget 1%)")
    return np.asarray(errs), skipped, fac.D, params


def _row(cfg, method, n, D, params, mean, std, se, trials, skipped, meta=None) -> ResultRow:
    x_c = params.x_c if params.correlated else 0.0
    return ResultRow(cfg.scenario, method, int(n), float(cfg.channel.sigma_s), float(x_c / D),
                     float(cfg.deployment.sigma_l), float(cfg.channel.doi),
                     float(cfg.estimator.participation), float(mean), float(mean / D), float(se),
                     int(trials), float(std), int(skipped), meta or {})


def _realized_n(cfg) -> int:
    spec = cfg.deployment
    if spec.kind in ("fixed_grid", "random_grid"):
        return place_fixed_grid(spec.R, spec.n, spec.area).n
    return spec.n


def run_experiment(cfg: ExperimentConfig) -> list:
    if cfg.kind == "theory":
        return run_theory(cfg)
    if cfg.kind == "overhead":
        raise HarnessError("overhead configs produce reports; use run_overhead")
    errs, skipped, D, params = run_trials(cfg)
    n = errs.size
    mean = math.fsum(errs) / n if n else float("nan")
    std = float(np.std(errs, ddof=1)) if n > 1 else 0.0
    se = std / math.sqrt(n) if n > 1 else 0.0
    return [_row(cfg, cfg.estimator.method, _realized_n(cfg), D, params, mean, std, se, n, skipped)]


def run_theory(cfg: ExperimentConfig) -> list:
    """Analytical mean error, averaged over placements for random layouts."""
    est = cfg.estimator
    if est.pmin_policy == "participant_min":
        raise HarnessError(f"{cfg.scenario}: theory needs a static P_min")
    if est.method != "cwcl" or est.participation < 1 or cfg.channel.doi > 0:
        raise HarnessError(f"{cfg.scenario}: theory covers full-participation WCL without DOI")
    if cfg.deployment.pu == "uniform":
        raise HarnessError(f"{cfg.scenario}: theory needs a fixed PU or a random-grid cell PU")
    spec = cfg.deployment
    D = nominal_spacing(cfg)
    params = channel_params(cfg, D)
    pmin = pmin_for(cfg, params)
    method = "theory_" + est.theory_method
    try:
        if spec.kind == "fixed_grid":
            dep = place_fixed_grid(spec.R, spec.n, spec.area).with_pu(spec.pu)
            res = analyze_deployment(params, dep, pmin, spec.sigma_l, est.theory_method)
            return [_row(cfg, method, dep.n, D, params, res.mean, res.std, 0.0, 1, 0)]
        fac = _TrialFactory(cfg)
        avg = average_over_placements(lambda r: fac.draw(r), params, pmin, cfg.placements,
                                      Rng(cfg.seed, cfg.point), spec.sigma_l, est.theory_method)
    except Exception as exc:
        raise HarnessError(f"{cfg.scenario}: {exc}") from exc
    return [_row(cfg, method, _realized_n(cfg), D, params, avg.mean_err_m, avg.std_err_m,
                 avg.se_mean_m, cfg.placements, 0)]


def cluster_radius_for(R: float, clusters: int) -> float:
    """Hexagon circumradius giving ``clusters`` cells of the disk's area."""
    return math.sqrt(math.pi * R**2 / (clusters * HEX_AREA))


def run_overhead(cfg: ExperimentConfig) -> list:
    """Analytical and ledger-based power/OPS reports."""
    ov = cfg.overhead
    model = PowerModel(ov.p_r_min, cfg.channel.gamma, cfg.channel.d0, cfg.channel.sigma_s)
    name = cfg.scenario
    reports = []
    if ov.cluster_sizes:
        n = ov.n
        reports.append(OverheadReport(name, "cwcl", 1, n, cwcl_expected_power(model, ov.R, n), cwcl_ops(n), n))
        for m in ov.cluster_sizes:
            L = n / m
            rc = cluster_radius_for(ov.R, L)
            msgs = sum(dwcl_message_count(m, L, ov.K, ov.eta))
            reports.append(OverheadReport(name, f"dwcl_M{m}", int(round(L)), msgs,
                                          dwcl_expected_power(model, rc, L, m, ov.K, ov.eta),
                                          dwcl_ops(n, m, L, ov.K, ov.eta), n, {"M": m, "L": L}))
        return reports

    dep0 = place_fixed_grid(ov.R, ov.n)
    n = dep0.n
    L = ov.clusters
    rc = cluster_radius_for(ov.R, L)
    M = n / L
    meta = {"R_C": rc, "per_node": "total / N"}
    reports.append(OverheadReport(name, "cwcl_analytic", 1, n, cwcl_expected_power(model, ov.R, n),
                                  cwcl_ops(n), n, meta))
    reports.append(OverheadReport(name, "dwcl_analytic", L, sum(dwcl_message_count(M, L, ov.K, ov.eta)),
                                  dwcl_expected_power(model, rc, L, M, ov.K, ov.eta),
                                  dwcl_ops(n, M, L, ov.K, ov.eta), n, {**meta, "eta": ov.eta}))
    if ov.runs == 0:
        return reports

    cs = build_hex_clusters(dep0, rc)
    params = channel_params(cfg, math.sqrt(dep0.area.measure / n))
    root = Rng(cfg.seed, cfg.point)
    dist_c = cwcl_link_distances(dep0.true_positions)
    pc, pd, etas, msgs = [], [], [], []
    spec = cfg.deployment
    for t in range(ov.runs):
        r = root.child(t)
        gen = r.child(streams.PLACEMENT).generator()
        pu = _uniform_pu(spec, gen) if spec.pu == "uniform" else np.asarray(spec.pu, float)
        dep = dep0.with_pu(pu)
        rss = sample_rss(params, dep, r.child(streams.SHADOWING))
        res = run_dwcl(dep, rss, DwclConfig(rc), cluster_set=cs, run=t)
        links = r.child(streams.CONTROL_LINKS).generator()
        pc.append(ledger_power(model, dist_c, links))
        pd.append(ledger_power(model, res.ledger, links))
        etas.append(res.eta)
        msgs.append(len(res.ledger))
    counts = dwcl_counts(cs.with_active(cs.nonempty))
    eta = float(np.mean(etas))
    rmeta = {**meta, "eta": eta, "M": counts["M"], "L": counts["L"], "K": counts["K"], "runs": ov.runs}
    reports.append(OverheadReport(name, "cwcl_ledger", 1, n, float(np.mean(pc)), cwcl_ops(n), n, rmeta))
    reports.append(OverheadReport(name, "dwcl_ledger", counts["L"], float(np.mean(msgs)), float(np.mean(pd)),
                                  dwcl_ops(n, counts["M"], counts["L"], counts["K"], eta), n, rmeta))
    reports.append(OverheadReport(name, "dwcl_analytic_realized", counts["L"],
                                  sum(dwcl_message_count(counts["M"], counts["L"], counts["K"], eta)),
                                  dwcl_expected_power(model, rc, counts["L"], counts["M"], counts["K"], eta),
                                  dwcl_ops(n, counts["M"], counts["L"], counts["K"], eta), n, rmeta))
    return reports


def run_dwcl_runs(cfg: ExperimentConfig) -> tuple:
    """Distributed runs with full ledgers: (ResultRow list, ledgers, (run, result, pu) rows)."""
    if cfg.estimator.method != "dwcl":
        raise HarnessError(f"{cfg.scenario}: dwcl runs need estimator.method = 'dwcl'")
    fac = _TrialFactory(cfg)
    est = cfg.estimator
    dcfg = DwclConfig(est.cluster_radius, est.threshold, est.aggregate)
    root = Rng(cfg.seed, cfg.point)
    ledgers, results, errs, skipped, fallbacks = [], [], [], 0, 0
    for t in range(cfg.trials):
        r = root.child(t)
        dep = fac.draw(r)
        rss = sample_rss(fac.params, dep, r.child(streams.SHADOWING), factor=fac.factor)
        try:
            res = run_dwcl(dep, rss, dcfg, run=t)
        except (EstimationError, ProtocolError) as exc:
            skipped += 1
            log.info("%s run %d skipped: %s", cfg.scenario, t, exc)
            continue
        fallbacks += res.fallback
        ledgers.append(res.ledger)
        results.append((t, res, dep.pu_position))
        errs.append(localization_error(res.estimate, dep.pu_position))
    if skipped > FAILURE_BUDGET * cfg.trials:
        raise HarnessError(f"{cfg.scenario}: {skipped} of {cfg.trials} runs failed (budget 1%)")
    errs = np.asarray(errs)
    n = errs.size
    std = float(np.std(errs, ddof=1)) if n > 1 else 0.0
    row = _row(cfg, "dwcl", _realized_n(cfg), fac.D, fac.params, math.fsum(errs) / n, std,
               std / math.sqrt(n) if n > 1 else 0.0, n, skipped, {"fallbacks": fallbacks})
    return [row], ledgers, results
