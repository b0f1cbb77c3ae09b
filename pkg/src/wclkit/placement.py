"""Sensor deployments, PU placement and self-localization noise."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from wclkit.rng import RngLike, as_generator


@dataclass(frozen=True)
class Disk:
    radius: float

    @property
    def measure(self) -> float:
        return math.pi * self.radius**2

    def contains(self, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.hypot(pts[:, 0], pts[:, 1]) <= self.radius * (1 + tol)

    def edge_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return self.radius - np.hypot(pts[:, 0], pts[:, 1])


@dataclass(frozen=True)
class Square:
    """Axis-aligned square centred on the origin."""

    half_side: float

    @property
    def measure(self) -> float:
        return (2.0 * self.half_side) ** 2

    def contains(self, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lim = self.half_side * (1 + tol)
        return (np.abs(pts[:, 0]) <= lim) & (np.abs(pts[:, 1]) <= lim)

    def edge_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return self.half_side - np.max(np.abs(pts), axis=1)


Area = Union[Disk, Square]


@dataclass(frozen=True)
class Deployment:
    """Node coordinates (true and self-measured), PU location and area.

    Positions are ``(N, 2)`` float arrays in metres. Instances are treated as
    immutable; use :func:`dataclasses.replace` to derive variants.
    """

    true_positions: np.ndarray
    measured_positions: np.ndarray
    pu_position: np.ndarray
    area: Area
    sigma_l: float = 0.0
    placement_kind: str = "fixed_grid"
    grid_spacing: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        tp = np.asarray(self.true_positions, dtype=float).reshape(-1, 2)
        mp = np.asarray(self.measured_positions, dtype=float).reshape(-1, 2)
        pu = np.asarray(self.pu_position, dtype=float).reshape(2)
        if tp.shape != mp.shape:
            raise ValueError("measured_positions must match true_positions in length")
        if not (np.all(np.isfinite(tp)) and np.all(np.isfinite(mp)) and np.all(np.isfinite(pu))):
            raise ValueError("coordinates must be finite")
        if self.sigma_l < 0:
            raise ValueError("sigma_l must be >= 0")
        if not np.all(self.area.contains(tp)):
            raise ValueError("true positions must lie inside the area")
        for name, arr in (("true_positions", tp), ("measured_positions", mp), ("pu_position", pu)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.true_positions.shape[0]

    def with_pu(self, pu) -> "Deployment":
        return replace(self, pu_position=np.asarray(pu, dtype=float))

    def true_distances(self) -> np.ndarray:
        return np.hypot(*(self.true_positions - self.pu_position).T)

    def subset(self, ids) -> "Deployment":
        ids = np.asarray(ids, dtype=int)
        return replace(
            self,
            true_positions=self.true_positions[ids],
            measured_positions=self.measured_positions[ids],
        )


def _half_integer_shells(n_target: int):
    """Norms and cumulative counts of the lattice (Z + 1/2)^2, by shell."""
    k = int(math.ceil(math.sqrt(n_target / math.pi))) + 3
    h = np.arange(-k, k) + 0.5
    hx, hy = np.meshgrid(h, h)
    r2 = (hx**2 + hy**2).ravel()
    shells, counts = np.unique(np.round(r2, 9), return_counts=True)
    return np.sqrt(shells), np.cumsum(counts), k


def _centered_lattice(n_side_half: int, spacing: float) -> np.ndarray:
    h = (np.arange(-n_side_half, n_side_half) + 0.5) * spacing
    gx, gy = np.meshgrid(h, h)
    return np.column_stack([gx.ravel(), gy.ravel()])


def place_fixed_grid(R: float, n_target: int, area: str = "disk") -> Deployment:
    """Square lattice symmetric about the origin, PU at the origin.

    With ``area="disk"`` the lattice is clipped to the disk of radius ``R``.
    The spacing is picked so the realized count is the largest shell-complete
    count not exceeding ``n_target``, with the boundary circle placed midway
    between the outermost kept shell and the first dropped one.

    With ``area="square"`` the lattice fills the square of half-side ``R``
    with an even number of nodes per side (so no node sits on the PU).
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if n_target < 4:
        raise ValueError("n_target must be >= 4")

    if area == "disk":
        norms, cum, k = _half_integer_shells(n_target)
        idx = int(np.searchsorted(cum, n_target, side="right")) - 1
        g = 2.0 * R / (norms[idx] + norms[idx + 1])
        pts = _centered_lattice(k, g)
        r = np.hypot(pts[:, 0], pts[:, 1])
        pts = pts[r <= norms[idx] * g * (1 + 1e-12)]
        assert len(pts) == cum[idx]
        region: Area = Disk(R)
    elif area == "square":
        n_side = int(math.isqrt(n_target))
        n_side -= n_side % 2
        g = 2.0 * R / n_side
        pts = _centered_lattice(n_side // 2, g)
        region = Square(R)
    else:
        raise ValueError(f"unknown grid area {area!r}")

    # order by radius then angle so ids are stable and nearby ids are nearby nodes
    order = np.lexsort((np.arctan2(pts[:, 1], pts[:, 0]), np.round(np.hypot(pts[:, 0], pts[:, 1]), 9)))
    pts = pts[order]
    return Deployment(pts, pts.copy(), np.zeros(2), region, 0.0, "fixed_grid", grid_spacing=g)


def place_random_grid(R: float, n_target: int, rng: RngLike, area: str = "disk") -> Deployment:
    """Fixed grid with the PU drawn uniformly inside the central lattice cell."""
    dep = place_fixed_grid(R, n_target, area)
    g = dep.grid_spacing
    pu = as_generator(rng).uniform(-g / 2, g / 2, size=2)
    return replace(dep, pu_position=pu, placement_kind="random_grid")


def place_uniform_disk(R: float, n: int, rng: RngLike, pu=(0.0, 0.0)) -> Deployment:
    if R <= 0:
        raise ValueError("R must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    r = R * np.sqrt(gen.random(n))
    th = 2.0 * np.pi * gen.random(n)
    pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
    return Deployment(pts, pts.copy(), np.asarray(pu, float), Disk(R), 0.0, "uniform_disk")


def place_uniform_square(half_side: float, n: int, rng: RngLike, pu=(0.0, 0.0)) -> Deployment:
    if half_side <= 0:
        raise ValueError("half_side must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = as_generator(rng).uniform(-half_side, half_side, size=(n, 2))
    return Deployment(pts, pts.copy(), np.asarray(pu, float), Square(half_side), 0.0, "uniform_square")


def apply_position_noise(dep: Deployment, sigma_l: float, rng: RngLike) -> Deployment:
    """Draw self-localization errors: measured = true + N(0, sigma_l^2 I2)."""
    if sigma_l < 0:
        raise ValueError("sigma_l must be >= 0")
    if sigma_l == 0:
        meas = dep.true_positions.copy()
    else:
        meas = dep.true_positions + as_generator(rng).normal(0.0, sigma_l, size=dep.true_positions.shape)
    return replace(dep, measured_positions=meas, sigma_l=float(sigma_l))


def average_node_spacing(dep: Deployment) -> float:
    """D = sqrt(area / N)."""
    if dep.n < 2:
        raise ValueError("average node spacing needs at least two nodes")
    return math.sqrt(dep.area.measure / dep.n)


def write_deployment_csv(dep: Deployment, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "true_x", "true_y", "meas_x", "meas_y"])
        for i, (t, m) in enumerate(zip(dep.true_positions, dep.measured_positions)):
            w.writerow([i, repr(float(t[0])), repr(float(t[1])), repr(float(m[0])), repr(float(m[1]))])


def read_deployment_csv(path, area: Area, pu=(0.0, 0.0), sigma_l: float = 0.0, kind: str = "file") -> Deployment:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["id"]))
    tp = np.array([[float(r["true_x"]), float(r["true_y"])] for r in rows])
    mp = np.array([[float(r["meas_x"]), float(r["meas_y"])] for r in rows])
    return Deployment(tp, mp, np.asarray(pu, float), area, sigma_l, kind)
