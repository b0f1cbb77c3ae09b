"""CSV output for experiment results."""

from __future__ import annotations

import csv
import os

RESULT_FIELDS = [
    "scenario", "method", "N", "sigma_s", "x_c_over_D", "sigma_l", "doi", "participation",
    "mean_err_m", "mean_err_over_D", "std_err", "trials", "std_m", "skipped",
]


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_results_csv(rows, path) -> None:
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in RESULT_FIELDS])


def read_results_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
