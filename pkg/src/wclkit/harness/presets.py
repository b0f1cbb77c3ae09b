"""Sweep definitions reproducing each figure's scenario at desk scale."""

from __future__ import annotations

from dataclasses import replace

from wclkit.harness.config import (
    ChannelSpec,
    ConfigError,
    DeploymentSpec,
    EstimatorSpec,
    ExperimentConfig,
    OverheadSpec,
)

DEFAULT_TRIALS = 2000
DEFAULT_PLACEMENTS = 50
GRID_N = (25, 49, 100, 196, 400)  # grid-realizable counts for a disk of radius R


def _sim(scenario, dep, ch, est=EstimatorSpec(), kind="simulate"):
    return ExperimentConfig(scenario=scenario, kind=kind, deployment=dep, channel=ch, estimator=est)


def _fig1a():
    out = []
    for s in (2.5, 5.0, 7.5, 10.0):
        for n in GRID_N:
            dep = DeploymentSpec("fixed_grid", 100.0, n)
            ch = ChannelSpec(sigma_s=s)
            out += [_sim("fig1a", dep, ch), _sim("fig1a", dep, ch, kind="theory")]
    return out


def _fig1b():
    out = []
    for xc in (0.0, 1.0, 2.0, 5.0, 10.0):
        for n in GRID_N:
            dep = DeploymentSpec("fixed_grid", 100.0, n)
            ch = ChannelSpec(sigma_s=4.0, x_c_over_D=xc or None)
            out += [_sim("fig1b", dep, ch), _sim("fig1b", dep, ch, kind="theory")]
    return out


def _fig2():
    out = []
    for sl in (0.0, 1.0, 3.0, 5.0, 7.0):
        for n in (49, 100, 196):
            dep = DeploymentSpec("fixed_grid", 100.0, n, sigma_l=sl)
            ch = ChannelSpec(sigma_s=5.0)
            out += [_sim("fig2", dep, ch), _sim("fig2", dep, ch, kind="theory")]
    return out


def _fig3():
    out = []
    for kind in ("random_grid", "uniform_disk"):
        for xc in (0.0, 0.5, 1.0, 2.0, 5.0):
            dep = DeploymentSpec(kind, 100.0, 100)
            ch = ChannelSpec(sigma_s=4.0, x_c_over_D=xc or None)
            out += [_sim("fig3", dep, ch), _sim("fig3", dep, ch, kind="theory")]
    return out


def _fig4():
    return [_sim("fig4", DeploymentSpec("uniform_disk", 100.0, n), ChannelSpec(sigma_s=4.0, doi=doi))
            for n in (50, 100, 200) for doi in (0.0, 0.1, 0.2, 0.3, 0.4)]


def _fig5():
    # analytical distribution against simulation on the fixed grid
    out = []
    for xc in (None, 2.0):
        dep = DeploymentSpec("fixed_grid", 100.0, 100)
        ch = ChannelSpec(sigma_s=4.0, x_c_over_D=xc)
        out += [_sim("fig5", dep, ch), _sim("fig5", dep, ch, kind="theory"),
                _sim("fig5", dep, ch, EstimatorSpec(theory_method="hayya"), kind="theory")]
    return out


def _fig6():
    return [_sim("fig6", DeploymentSpec("uniform_disk", 100.0, 100), ChannelSpec(sigma_s=4.0, x_c_over_D=xc or None),
                 EstimatorSpec(participation=p, pmin_policy="participant_min"))
            for xc in (0.0, 1.0, 2.0, 5.0) for p in (0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0)]


def _fig7():
    return [_sim("fig7", DeploymentSpec("uniform_disk", 100.0, 100), ChannelSpec(sigma_s=s), EstimatorSpec(m))
            for s in (1.0, 2.5, 5.0, 7.5, 10.0) for m in ("cwcl", "centroid", "lateration", "sn")]


def _fig8():
    dep = DeploymentSpec("uniform_square", 1000.0, 1000, pu="uniform")
    return [_sim("fig8", dep, ChannelSpec(sigma_s=s), EstimatorSpec(m, cluster_radius=200.0))
            for s in (2.0, 4.0, 6.0, 8.0) for m in ("cwcl", "dwcl", "sn")]


def _fig9():
    dep = DeploymentSpec("fixed_grid", 100.0, 784, pu="uniform")
    return [ExperimentConfig(scenario="fig9", kind="overhead", deployment=dep, channel=ChannelSpec(sigma_s=s),
                             overhead=OverheadSpec(R=100.0, n=n, clusters=16, runs=200))
            for s in (0.0, 4.0, 8.0) for n in (196, 400, 784, 1600)]


def _fig10():
    return [ExperimentConfig(scenario="fig10", kind="overhead", channel=ChannelSpec(sigma_s=4.0),
                             overhead=OverheadSpec(R=100.0, n=400, K=6, eta=0.25, runs=0,
                                                   cluster_sizes=(16, 25, 50, 100)))]


PRESETS = {
    "fig1a": _fig1a, "fig1b": _fig1b, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5,
    "fig6": _fig6, "fig7": _fig7, "fig8": _fig8, "fig9": _fig9, "fig10": _fig10,
}


def figure_preset(fig_id: str, trials: int | None = None, seed: int | None = None,
                  placements: int | None = None) -> list:
    """Configs for one figure; each sweep point gets its own stream index."""
    if fig_id not in PRESETS:
        raise ConfigError(f"unknown figure id {fig_id!r} (known: {', '.join(PRESETS)})")
    out = []
    for i, cfg in enumerate(PRESETS[fig_id]()):
        kw = {"point": i, "trials": trials or DEFAULT_TRIALS}
        if cfg.kind == "theory":
            kw["placements"] = placements or DEFAULT_PLACEMENTS
        if seed is not None:
            kw["seed"] = seed
        if cfg.kind == "overhead" and trials is not None and cfg.overhead.runs:
            kw["overhead"] = replace(cfg.overhead, runs=trials)
        out.append(replace(cfg, **kw))
    return out
