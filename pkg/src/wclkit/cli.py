"""Command line entry point: ``wclkit <subcommand>``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from wclkit.dwcl import write_ledger_csv, write_result_csv
from wclkit.harness import (
    ConfigError,
    HarnessError,
    figure_preset,
    load_configs,
    run_experiment,
    run_overhead,
    write_results_csv,
)
from wclkit.harness.presets import PRESETS
from wclkit.harness.runner import run_dwcl_runs
from wclkit.overhead import write_report_csv

ENV_SEED = "WCL_SEED"
ENV_OUT = "WCL_OUT_DIR"


def _env_seed():
    v = os.environ.get(ENV_SEED)
    if v is None or v == "":
        return None
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"{ENV_SEED} must be an integer, got {v!r}") from None


def _out_dir(arg):
    return arg or os.environ.get(ENV_OUT) or "."


def _configs(args):
    cfgs = load_configs(args.config)
    seed = args.seed if args.seed is not None else _env_seed()
    out = []
    for i, c in enumerate(cfgs):
        kw = {}
        if seed is not None:
            kw["seed"] = seed
        if args.trials is not None:
            kw["trials"] = args.trials
        if len(cfgs) > 1 and c.point == 0:
            kw["point"] = i
        out.append(replace(c, **kw))
    return out


def _target(args, cfgs, suffix=""):
    if args.out and args.out.endswith(".csv"):
        return args.out
    if cfgs and cfgs[0].output and not args.out:
        return cfgs[0].output
    name = (cfgs[0].scenario if cfgs else "results") + suffix + ".csv"
    return os.path.join(_out_dir(args.out), name)


def _ensure_dir(path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)


def cmd_simulate(args) -> int:
    cfgs = _configs(args)
    rows = []
    for c in cfgs:
        rows += run_experiment(replace(c, kind="simulate") if c.kind == "theory" else c)
    path = _target(args, cfgs)
    write_results_csv(rows, path)
    print(path)
    return 0


def cmd_theory(args) -> int:
    cfgs = [replace(c, kind="theory") for c in _configs(args)]
    rows = []
    for c in cfgs:
        rows += run_experiment(c)
    path = _target(args, cfgs, "_theory")
    write_results_csv(rows, path)
    print(path)
    return 0


def cmd_dwcl(args) -> int:
    cfgs = _configs(args)
    rows, ledgers, results = [], [], []
    for c in cfgs:
        r, led, res = run_dwcl_runs(c)
        rows += r
        ledgers += led
        results += res
    path = _target(args, cfgs)
    base = path[:-4]
    write_results_csv(rows, path)
    _ensure_dir(path)
    write_ledger_csv(ledgers, base + "_ledger.csv")
    write_result_csv(results, base + "_runs.csv")
    print(path)
    return 0


def cmd_overhead(args) -> int:
    cfgs = _configs(args)
    reports = []
    for c in cfgs:
        reports += run_overhead(c)
    path = _target(args, cfgs, "_overhead")
    _ensure_dir(path)
    write_report_csv(reports, path)
    print(path)
    return 0


def cmd_figure(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    cfgs = figure_preset(args.id, trials=args.trials, seed=seed, placements=args.placements)
    out = _out_dir(args.out)
    os.makedirs(out, exist_ok=True)
    rows, reports = [], []
    for c in cfgs:
        if c.kind == "overhead":
            reports += run_overhead(c)
        else:
            rows += run_experiment(c)
    if rows:
        path = os.path.join(out, f"{args.id}.csv")
        write_results_csv(rows, path)
        print(path)
    if reports:
        path = os.path.join(out, f"{args.id}_overhead.csv")
        write_report_csv(reports, path)
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wclkit", description="Weighted centroid localization experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log skipped trials")
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, doc in (("simulate", cmd_simulate, "Monte Carlo simulation"),
                          ("theory", cmd_theory, "analytical error distribution"),
                          ("dwcl", cmd_dwcl, "distributed runs with message ledgers"),
                          ("overhead", cmd_overhead, "power and operation counts")):
        s = sub.add_parser(name, help=doc)
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--out", help="output directory, or a .csv path")
        s.set_defaults(func=fn)

    f = sub.add_parser("figure", help="run a figure preset")
    f.add_argument("id", choices=sorted(PRESETS))
    f.add_argument("--trials", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--placements", type=int, help="placements averaged by theory rows")
    f.add_argument("--out", help="output directory")
    f.set_defaults(func=cmd_figure)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, HarnessError, OSError, ValueError) as exc:
        print(f"wclkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
