import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wclkit.harness import (
    ChannelSpec,
    ConfigError,
    DeploymentSpec,
    EstimatorSpec,
    ExperimentConfig,
    HarnessError,
    OverheadSpec,
    PRESETS,
    figure_preset,
    load_configs,
    read_results_csv,
    run_experiment,
    run_overhead,
    write_results_csv,
)
from wclkit.harness.config import config_from_dict
from wclkit.harness.io import RESULT_FIELDS
from wclkit.harness.runner import cluster_radius_for, run_dwcl_runs, run_trials
from wclkit.placement import place_fixed_grid


def grid_cfg(**kw):
    base = dict(deployment=DeploymentSpec("fixed_grid", 100.0, 100), channel=ChannelSpec(sigma_s=4.0), trials=200)
    base.update(kw)
    return ExperimentConfig(**base)


def test_exact_zero_single_trial():
    cfg = grid_cfg(channel=ChannelSpec(sigma_s=0.0), trials=1)
    row = run_experiment(cfg)[0]
    assert row.mean_err_m == 0.0 and row.trials == 1


def test_identical_seeds_identical_bytes(tmp_path):
    cfg = ExperimentConfig(deployment=DeploymentSpec("uniform_disk", 100.0, 60), trials=100, seed=5)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results_csv(run_experiment(cfg), a)
    write_results_csv(run_experiment(cfg), b)
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    write_results_csv(run_experiment(cfg.with_overrides(seed=6)), c)
    assert c.read_bytes() != a.read_bytes()


def test_csv_schema(tmp_path):
    p = tmp_path / "r.csv"
    write_results_csv(run_experiment(grid_cfg(trials=20)), p)
    rows = read_results_csv(p)
    assert list(rows[0].keys()) == RESULT_FIELDS
    assert RESULT_FIELDS[:12] == ["scenario", "method", "N", "sigma_s", "x_c_over_D", "sigma_l", "doi",
                                  "participation", "mean_err_m", "mean_err_over_D", "std_err", "trials"]


@settings(max_examples=10)
@given(st.sampled_from(["fixed_grid", "random_grid", "uniform_disk"]), st.floats(0.0, 8.0),
       st.integers(0, 2**32), st.sampled_from([None, 1.0, 3.0]))
def test_normalization_and_accounting(kind, sigma_s, seed, xc):
    cfg = ExperimentConfig(deployment=DeploymentSpec(kind, 100.0, 49),
                           channel=ChannelSpec(sigma_s=sigma_s, x_c_over_D=xc), trials=30, seed=seed)
    row = run_experiment(cfg)[0]
    D = row.mean_err_m / row.mean_err_over_D if row.mean_err_over_D else None
    if kind != "uniform_disk":
        g = place_fixed_grid(100.0, 49)
        D_true = math.sqrt(g.area.measure / g.n)
    else:
        D_true = math.sqrt(math.pi * 1e4 / 49)
    assert row.mean_err_over_D * D_true == pytest.approx(row.mean_err_m, rel=1e-12, abs=1e-300)
    if D is not None:
        assert D == pytest.approx(D_true, rel=1e-12)
    assert row.trials + row.skipped == cfg.trials


def test_failure_budget_is_enforced():
    # a floor above every node's power makes every trial fail
    cfg = grid_cfg(estimator=EstimatorSpec(pmin_policy="fixed", pmin_dbm=10.0), trials=50)
    with pytest.raises(HarnessError, match="budget"):
        run_experiment(cfg)


def test_skips_are_counted():
    # floor near the border power: some trials lose every node
    cfg = ExperimentConfig(deployment=DeploymentSpec("uniform_disk", 100.0, 5),
                           channel=ChannelSpec(sigma_s=4.0),
                           estimator=EstimatorSpec(pmin_policy="fixed", pmin_dbm=-55.0), trials=1000)
    with pytest.raises(HarnessError):
        run_experiment(cfg)
    errs, skipped, D, _ = run_trials(cfg.with_overrides(estimator=EstimatorSpec(pmin_policy="fixed", pmin_dbm=-200.0)))
    assert skipped == 0 and errs.size == 1000


@pytest.mark.parametrize("method", ["cwcl", "centroid", "sn", "lateration", "dwcl"])
def test_all_methods_run(method):
    dep = DeploymentSpec("uniform_square", 500.0, 200, pu="uniform") if method == "dwcl" else \
        DeploymentSpec("uniform_disk", 100.0, 100)
    cfg = ExperimentConfig(deployment=dep, estimator=EstimatorSpec(method, cluster_radius=150.0), trials=30)
    row = run_experiment(cfg)[0]
    assert row.method == method and np.isfinite(row.mean_err_m) and row.trials == 30


def test_theory_symmetric_grid_and_consistency():
    cfg = grid_cfg(kind="theory")
    row = run_experiment(cfg)[0]
    assert row.method == "theory_quadrature" and row.N == 96
    tiny = run_experiment(grid_cfg(kind="theory", channel=ChannelSpec(sigma_s=4.0, x_c=1e-6)))[0]
    assert tiny.mean_err_m == pytest.approx(row.mean_err_m, rel=1e-9)


@pytest.mark.slow
def test_theory_matches_simulation_grid():
    sim = run_experiment(grid_cfg(trials=4000, seed=1))[0]
    th = run_experiment(grid_cfg(kind="theory"))[0]
    assert abs(sim.mean_err_m - th.mean_err_m) < 2 * sim.std_err


@pytest.mark.slow
def test_fig1a_point_matches_theory():
    cfgs = [c for c in figure_preset("fig1a", trials=3000)
            if c.channel.sigma_s == 5.0 and c.deployment.n == 196]
    sim = run_experiment(next(c for c in cfgs if c.kind == "simulate"))[0]
    th = run_experiment(next(c for c in cfgs if c.kind == "theory"))[0]
    assert abs(sim.mean_err_m - th.mean_err_m) < 2 * sim.std_err


def test_theory_rejects_unsupported():
    with pytest.raises(HarnessError):
        run_experiment(grid_cfg(kind="theory", estimator=EstimatorSpec("sn")))
    with pytest.raises(HarnessError):
        run_experiment(grid_cfg(kind="theory", estimator=EstimatorSpec(pmin_policy="participant_min")))
    with pytest.raises(HarnessError):
        run_experiment(grid_cfg(kind="overhead", overhead=OverheadSpec()))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(trials=0)
    with pytest.raises(ConfigError):
        DeploymentSpec("hexagonal")
    with pytest.raises(ConfigError):
        ChannelSpec(x_c=1.0, x_c_over_D=1.0)
    with pytest.raises(ConfigError):
        EstimatorSpec("kalman")
    with pytest.raises(ConfigError):
        EstimatorSpec(participation=0.0)
    with pytest.raises(ConfigError):
        config_from_dict({"trials": 5, "colour": "red"})
    with pytest.raises(ConfigError):
        config_from_dict({"channel": {"sigma": 3}})
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="overhead")


def test_load_configs_forms(tmp_path):
    one = tmp_path / "one.json"
    one.write_text(json.dumps({"scenario": "x", "channel": {"sigma_s": 2.0}, "trials": 9}))
    (c,) = load_configs(one)
    assert c.channel.sigma_s == 2.0 and c.trials == 9 and c.deployment.kind == "fixed_grid"
    many = tmp_path / "many.json"
    many.write_text(json.dumps({"scenario": "y", "channel": {"sigma_s": 3.0, "gamma": 3.0},
                                "experiments": [{"channel": {"sigma_s": 1.0}}, {"trials": 7}]}))
    a, b = load_configs(many)
    assert a.channel.sigma_s == 1.0 and a.channel.gamma == 3.0
    assert b.channel.sigma_s == 3.0 and b.trials == 7 and b.scenario == "y"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_configs(bad)
    lst = tmp_path / "list.json"
    lst.write_text(json.dumps([{"trials": 3}, {"trials": 4}]))
    assert [c.trials for c in load_configs(lst)] == [3, 4]


def test_presets():
    with pytest.raises(ConfigError):
        figure_preset("fig11")
    assert set(PRESETS) == {f"fig{i}" for i in ("1a", "1b", 2, 3, 4, 5, 6, 7, 8, 9, 10)}
    f1 = figure_preset("fig1a")
    sims = [c for c in f1 if c.kind == "simulate"]
    assert {c.channel.sigma_s for c in sims} == {2.5, 5.0, 7.5, 10.0}
    assert {c.deployment.n for c in sims} == {25, 49, 100, 196, 400}
    assert all(c.deployment.kind == "fixed_grid" and c.deployment.sigma_l == 0 and c.deployment.R == 100
               for c in sims)
    assert all(c.trials == 2000 for c in sims)
    f6 = figure_preset("fig6")
    assert {c.estimator.participation for c in f6} >= {0.1, 1.0}
    assert {c.channel.x_c_over_D for c in f6} == {None, 1.0, 2.0, 5.0}
    assert all(c.deployment.kind == "uniform_disk" and c.deployment.n == 100 and c.channel.sigma_s == 4 for c in f6)
    f8 = figure_preset("fig8", trials=5)
    assert all(c.deployment.R == 1000 and c.deployment.n == 1000 and c.deployment.pu == "uniform" and
               c.estimator.cluster_radius == 200 and c.trials == 5 for c in f8)
    points = [c.point for c in figure_preset("fig7")]
    assert len(set(points)) == len(points)


def test_overhead_reports():
    cfg = ExperimentConfig(kind="overhead", deployment=DeploymentSpec("fixed_grid", 100.0, 196, pu="uniform"),
                           channel=ChannelSpec(sigma_s=4.0), overhead=OverheadSpec(n=196, runs=5))
    reps = run_overhead(cfg)
    names = [r.method for r in reps]
    assert names == ["cwcl_analytic", "dwcl_analytic", "cwcl_ledger", "dwcl_ledger", "dwcl_analytic_realized"]
    assert all(r.total_power_mw > 0 for r in reps)
    assert reps == run_overhead(cfg)
    assert cluster_radius_for(100.0, 16) == pytest.approx(27.49, abs=0.01)


def test_fig10_ops_rows():
    (cfg,) = figure_preset("fig10")
    reps = run_overhead(cfg)
    assert reps[0].method == "cwcl" and reps[0].ops == 10000
    assert [r.method for r in reps[1:]] == ["dwcl_M16", "dwcl_M25", "dwcl_M50", "dwcl_M100"]


def test_dwcl_runs_ledgers():
    cfg = ExperimentConfig(deployment=DeploymentSpec("uniform_square", 500.0, 200, pu="uniform"),
                           estimator=EstimatorSpec("dwcl", cluster_radius=150.0), trials=10)
    rows, ledgers, results = run_dwcl_runs(cfg)
    assert len(ledgers) == len(results) == rows[0].trials == 10
    assert rows[0].mean_err_m == pytest.approx(run_experiment(cfg)[0].mean_err_m)
    with pytest.raises(HarnessError):
        run_dwcl_runs(grid_cfg())
