"""Experiment configuration, loaded from JSON-compatible dictionaries."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

PLACEMENTS = ("fixed_grid", "random_grid", "uniform_disk", "uniform_square")
METHODS = ("cwcl", "dwcl", "centroid", "sn", "lateration")
KINDS = ("simulate", "theory", "overhead")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DeploymentSpec:
    kind: str = "fixed_grid"
    R: float = 100.0  # disk radius or square half-side
    n: int = 100
    area: str = "disk"  # grid area shape: disk or square
    pu: object = (0.0, 0.0)  # a point, or "uniform" over the area
    sigma_l: float = 0.0

    def __post_init__(self):
        if self.kind not in PLACEMENTS:
            raise ConfigError(f"unknown placement kind {self.kind!r}")
        if not self.R > 0:
            raise ConfigError("deployment R must be > 0")
        if self.n < 4:
            raise ConfigError("deployment needs n >= 4")
        if self.sigma_l < 0:
            raise ConfigError("sigma_l must be >= 0")
        if self.area not in ("disk", "square"):
            raise ConfigError(f"unknown area {self.area!r}")
        if isinstance(self.pu, str):
            if self.pu != "uniform":
                raise ConfigError(f"unknown PU placement {self.pu!r}")
        else:
            pu = tuple(float(v) for v in self.pu)
            if len(pu) != 2:
                raise ConfigError("pu must be [x, y] or 'uniform'")
            object.__setattr__(self, "pu", pu)


@dataclass(frozen=True)
class ChannelSpec:
    p0: float = 0.0
    d0: float = 1.0
    gamma: float = 3.8
    sigma_s: float = 4.0
    x_c: float | None = None  # metres
    x_c_over_D: float | None = None  # alternative: in units of node spacing
    doi: float = 0.0
    doi_ar: float = 0.95  # per-degree correlation of the coverage radius

    def __post_init__(self):
        if not 0 <= self.doi_ar < 1:
            raise ConfigError("doi_ar must be in [0, 1)")
        if self.x_c is not None and self.x_c_over_D is not None:
            raise ConfigError("give x_c or x_c_over_D, not both")
        if self.sigma_s < 0:
            raise ConfigError("sigma_s must be >= 0")
        if not 0 <= self.doi < 1:
            raise ConfigError("doi must be in [0, 1)")

    def correlation_distance(self, D: float) -> float:
        if self.x_c is not None:
            return float(self.x_c)
        if self.x_c_over_D is not None:
            return float(self.x_c_over_D) * D
        return 0.0


@dataclass(frozen=True)
class EstimatorSpec:
    method: str = "cwcl"
    pmin_policy: str = "border_quantile"
    pmin_dbm: float | None = None
    range_R: float = 100.0  # PU range used for the border floor
    margin_sigmas: float = 2.33
    participation: float = 1.0
    cluster_radius: float = 200.0
    threshold: float | None = None
    aggregate: bool = False
    theory_method: str = "quadrature"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.pmin_policy not in ("border_quantile", "fixed", "participant_min"):
            raise ConfigError(f"unknown P_min policy {self.pmin_policy!r}")
        if self.pmin_policy == "fixed" and self.pmin_dbm is None:
            raise ConfigError("fixed P_min policy needs pmin_dbm")
        if not 0 < self.participation <= 1:
            raise ConfigError("participation must be in (0, 1]")
        if self.theory_method not in ("hayya", "quadrature"):
            raise ConfigError(f"unknown theory method {self.theory_method!r}")
        if not self.cluster_radius > 0:
            raise ConfigError("cluster_radius must be > 0")


@dataclass(frozen=True)
class OverheadSpec:
    R: float = 100.0
    n: int = 784
    clusters: int = 16
    p_r_min: float = -70.0
    K: int = 6
    eta: float = 0.25
    runs: int = 1000
    cluster_sizes: tuple = ()  # when set: OPS-only sweep over nodes per cluster

    def __post_init__(self):
        if self.clusters < 1 or self.n < 4 or self.runs < 0:
            raise ConfigError("overhead needs clusters >= 1, n >= 4, runs >= 0")
        if not 0 <= self.eta <= 1:
            raise ConfigError("eta must be in [0, 1]")
        object.__setattr__(self, "cluster_sizes", tuple(int(m) for m in self.cluster_sizes))


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "custom"
    kind: str = "simulate"
    deployment: DeploymentSpec = field(default_factory=DeploymentSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    overhead: OverheadSpec | None = None
    trials: int = 2000
    placements: int = 1
    seed: int = 0
    point: int = 0  # sweep-point index, keeps random streams disjoint across points
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.placements < 1:
            raise ConfigError("placements must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a nonnegative 64-bit integer")
        if self.kind == "overhead" and self.overhead is None:
            raise ConfigError("overhead experiments need an 'overhead' section")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {"deployment": DeploymentSpec, "channel": ChannelSpec, "estimator": EstimatorSpec,
             "overhead": OverheadSpec}


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(extra))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    for key, cls in _SECTIONS.items():
        if key in data and data[key] is not None:
            data[key] = _build(cls, data[key], key)
    return _build(ExperimentConfig, data, "config")


def _merge(base: dict, item: dict) -> dict:
    out = dict(base)
    for k, v in item.items():
        if k in _SECTIONS and isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def load_configs(path) -> list:
    """One config, or a list of them under "experiments" (or a bare list)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(doc, dict) and "experiments" in doc:
        base = {k: v for k, v in doc.items() if k != "experiments"}
        items = [_merge(base, item) for item in doc["experiments"]]
    elif isinstance(doc, list):
        items = doc
    else:
        items = [doc]
    return [config_from_dict(item) for item in items]
