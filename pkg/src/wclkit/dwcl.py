"""Hexagonal clustering and the two-phase distributed WCL protocol.

Phase one picks the cluster with the loudest average RSS by comparing each
cluster only with the neighbour its intra-cluster RSS gradient points at, and
with all neighbours only when that first comparison is won. Phase two runs
WCL around the selected cluster's strongest node, pooling nodes from the
adjacent clusters that fall inside a border-corrected radius.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from wclkit.channel import RssRealization
from wclkit.estimators import Estimate, weighted_centroid
from wclkit.placement import Deployment, Disk, Square

SQRT3 = math.sqrt(3.0)
FLAT_TOL = 1e-9
KINDS = ("report", "avg_rss", "probe", "poll", "result")

# axial offsets of the six edge-sharing neighbours, counter-clockwise from east
_HEX_DIRS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class Cluster:
    id: int
    members: np.ndarray
    head: int | None
    center: np.ndarray
    adjacency: tuple
    axial: tuple = (0, 0)

    @property
    def empty(self) -> bool:
        return self.members.size == 0


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple
    radius: float
    area: object
    active: tuple
    node_cluster: np.ndarray

    def __getitem__(self, cid: int) -> Cluster:
        return self.clusters[cid]

    @property
    def nonempty(self) -> tuple:
        return tuple(c.id for c in self.clusters if not c.empty)

    def neighbors(self, cid: int) -> list:
        """Nonempty edge-sharing neighbours."""
        return [j for j in self.clusters[cid].adjacency if not self.clusters[j].empty]

    def with_active(self, ids) -> "ClusterSet":
        ids = tuple(sorted(int(i) for i in ids))
        for i in ids:
            if self.clusters[i].empty:
                raise ValueError(f"cluster {i} is empty and cannot be active")
        return ClusterSet(self.clusters, self.radius, self.area, ids, self.node_cluster)


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    kind: str
    distance: float
    payload: int = 1


@dataclass
class MessageLedger:
    """Append-only record of control messages in one protocol run."""

    run: int = 0
    entries: list = field(default_factory=list)

    def append(self, src, dst, kind, distance, payload=1):
        if kind not in KINDS:
            raise ValueError(f"unknown message kind {kind!r}")
        self.entries.append(Message(int(src), int(dst), kind, float(distance), int(payload)))

    def __len__(self):
        return len(self.entries)

    def count(self, kinds=None) -> int:
        if kinds is None:
            return len(self.entries)
        kinds = (kinds,) if isinstance(kinds, str) else tuple(kinds)
        return sum(m.kind in kinds for m in self.entries)

    def distances(self, kinds=None) -> np.ndarray:
        kinds = KINDS if kinds is None else ((kinds,) if isinstance(kinds, str) else tuple(kinds))
        return np.array([m.distance for m in self.entries if m.kind in kinds], float)


@dataclass(frozen=True)
class ClusterStats:
    avg_rss: float
    centroid: np.ndarray
    wcl: np.ndarray
    gradient: np.ndarray | None  # unit vector towards increasing RSS, None when flat

    @property
    def flat(self) -> bool:
        return self.gradient is None


@dataclass(frozen=True)
class DwclConfig:
    cluster_radius: float = 200.0
    threshold: float | None = None
    aggregate: bool = False
    mobility: bool = False

    def __post_init__(self):
        if not self.cluster_radius > 0:
            raise ValueError("cluster_radius must be > 0")


@dataclass(frozen=True)
class DwclResult:
    selected: int
    strongest: int
    r_star: float
    estimate: Estimate
    ledger: MessageLedger
    fallback: bool = False
    eta: float = 0.0
    n_active: int = 0


# hex geometry (pointy-top, circumradius rc, a cell centred on the origin)

def hex_center(q, r, rc):
    return np.array([rc * SQRT3 * (q + r / 2.0), rc * 1.5 * r])


def point_to_axial(pts: np.ndarray, rc: float) -> np.ndarray:
    """Axial coordinates of the hex containing each point, by cube rounding."""
    pts = np.atleast_2d(pts)
    qf = (SQRT3 / 3.0 * pts[:, 0] - pts[:, 1] / 3.0) / rc
    rf = (2.0 / 3.0 * pts[:, 1]) / rc
    sf = -qf - rf
    q, r, s = np.round(qf), np.round(rf), np.round(sf)
    dq, dr, ds = np.abs(q - qf), np.abs(r - rf), np.abs(s - sf)
    fix_q = (dq > dr) & (dq > ds)
    fix_r = ~fix_q & (dr > ds)
    q = np.where(fix_q, -r - s, q)
    r = np.where(fix_r, -q - s, r)
    return np.column_stack([q, r]).astype(int)


def _area_cells(area, rc: float) -> set:
    if isinstance(area, Disk):
        reach = area.radius + rc
        test = lambda c: math.hypot(*c) <= reach
    elif isinstance(area, Square):
        reach = area.half_side + rc
        test = lambda c: abs(c[0]) <= reach and abs(c[1]) <= reach
    else:
        raise TypeError(f"unsupported area {type(area).__name__}")
    kr = int(math.ceil(reach / (1.5 * rc))) + 1
    kq = int(math.ceil(reach / (SQRT3 * rc))) + kr + 1
    cells = set()
    for r in range(-kr, kr + 1):
        for q in range(-kq, kq + 1):
            if test(hex_center(q, r, rc)):
                cells.add((q, r))
    return cells


def build_hex_clusters(dep: Deployment, cluster_radius: float) -> ClusterSet:
    """Tile the area with hexagons and assign nodes by measured position.

    The head is the member nearest the hex centre (ties to the lower id).
    All nonempty clusters start active.
    """
    rc = float(cluster_radius)
    if not rc > 0:
        raise ValueError("cluster radius must be > 0")
    ax = point_to_axial(dep.measured_positions, rc) if dep.n else np.empty((0, 2), int)
    cells = _area_cells(dep.area, rc) | {tuple(a) for a in ax.tolist()}
    keys = sorted(cells, key=lambda c: (c[1], c[0]))
    index = {k: i for i, k in enumerate(keys)}
    node_cluster = np.array([index[tuple(a)] for a in ax.tolist()], dtype=int)
    node_cluster.setflags(write=False)

    clusters = []
    for i, (q, r) in enumerate(keys):
        center = hex_center(q, r, rc)
        members = np.flatnonzero(node_cluster == i)
        head = None
        if members.size:
            d = np.hypot(*(dep.measured_positions[members] - center).T)
            head = int(members[np.lexsort((members, d))[0]])
        adj = tuple(sorted(index[(q + dq, r + dr)] for dq, dr in _HEX_DIRS if (q + dq, r + dr) in index))
        members.setflags(write=False)
        center.setflags(write=False)
        clusters.append(Cluster(i, members, head, center, adj, (q, r)))
    active = tuple(c.id for c in clusters if not c.empty)
    return ClusterSet(tuple(clusters), rc, dep.area, active, node_cluster)


# phase one

def cluster_statistics(cluster: Cluster, dep: Deployment, rss: RssRealization) -> ClusterStats:
    """Average RSS, centroid, intra-cluster WCL and the RSS gradient direction.

    The intra-cluster WCL uses the weakest member as its floor, so that member
    gets zero weight. The gradient is (L_w - L_c) normalized, pointing from the
    plain centroid towards the louder side of the cluster.
    """
    if cluster.empty:
        raise ValueError(f"cluster {cluster.id} is empty")
    p = rss.powers[cluster.members]
    pos = dep.measured_positions[cluster.members]
    lc = pos.mean(axis=0)
    w = p - p.min()
    lw = weighted_centroid(pos, w) if w.sum() > 0 else lc
    diff = lw - lc
    nrm = math.hypot(*diff)
    grad = diff / nrm if nrm >= FLAT_TOL else None
    return ClusterStats(float(p.mean()), lc, lw, grad)


def next_cluster(cluster: Cluster, cluster_set: ClusterSet, gradient, stats: dict) -> int:
    """Neighbour whose centroid direction best matches the gradient.

    Ties (within 1e-12) and a flat gradient go to the neighbour with the
    highest average RSS, then the lower id.
    """
    nbrs = cluster_set.neighbors(cluster.id)
    if not nbrs:
        raise ProtocolError("isolated cluster")
    if gradient is not None:
        here = stats[cluster.id].centroid
        score = []
        for j in nbrs:
            off = stats[j].centroid - here
            n = math.hypot(*off)
            score.append(float(off @ gradient) / n if n > 0 else -np.inf)
        best = max(score)
        nbrs = [j for j, s in zip(nbrs, score) if s >= best - 1e-12]
    return max(nbrs, key=lambda j: (stats[j].avg_rss, -j))


def _head_distance(cluster_set: ClusterSet, dep: Deployment, i: int, j: int) -> float:
    a, b = cluster_set[i].head, cluster_set[j].head
    return float(math.hypot(*(dep.true_positions[a] - dep.true_positions[b])))


def _stats_for(cluster_set, dep, rss, ids) -> dict:
    return {i: cluster_statistics(cluster_set[i], dep, rss) for i in ids}


def head_cluster_selection(cluster_set: ClusterSet, dep: Deployment, rss: RssRealization,
                           ledger: MessageLedger | None = None, return_info: bool = False):
    """Run phase one on every active cluster and return the head cluster id.

    A cluster that is louder than its gradient neighbour probes all its
    neighbours and becomes a candidate when it beats each of them. The
    loudest candidate is selected; with no candidate the loudest active
    cluster is used and the fallback is reported.
    """
    if not cluster_set.active:
        raise ProtocolError("no active clusters")
    ledger = MessageLedger() if ledger is None else ledger
    involved = set(cluster_set.active)
    for i in cluster_set.active:
        involved.update(cluster_set.neighbors(i))
    stats = _stats_for(cluster_set, dep, rss, sorted(involved))

    # members report their RSS to the head
    for i in cluster_set.active:
        c = cluster_set[i]
        hp = dep.true_positions[c.head]
        for m in c.members:
            if m != c.head:
                ledger.append(m, c.head, "report", math.hypot(*(dep.true_positions[m] - hp)))

    candidates, line8 = [], 0
    for i in cluster_set.active:
        c = cluster_set[i]
        nbrs = cluster_set.neighbors(i)
        if not nbrs:
            candidates.append(i)
            continue
        nx = next_cluster(c, cluster_set, stats[i].gradient, stats)
        d = _head_distance(cluster_set, dep, i, nx)
        ledger.append(c.head, cluster_set[nx].head, "probe", d)
        ledger.append(cluster_set[nx].head, c.head, "avg_rss", d)
        if stats[i].avg_rss > stats[nx].avg_rss:
            line8 += 1
            for j in nbrs:
                d = _head_distance(cluster_set, dep, i, j)
                ledger.append(c.head, cluster_set[j].head, "probe", d)
                ledger.append(cluster_set[j].head, c.head, "avg_rss", d)
            if all(stats[i].avg_rss > stats[j].avg_rss for j in nbrs):
                candidates.append(i)

    fallback = not candidates
    pool = candidates if candidates else list(cluster_set.active)
    selected = max(pool, key=lambda j: (stats[j].avg_rss, -j))
    if return_info:
        return selected, {"fallback": fallback, "eta": line8 / len(cluster_set.active),
                          "line8": line8, "candidates": candidates, "stats": stats}
    return selected


# phase two

def modified_wcl(cluster_set: ClusterSet, selected: int, dep: Deployment, rss: RssRealization,
                 ledger: MessageLedger | None = None, aggregate: bool = False) -> DwclResult:
    """WCL around the selected cluster's strongest node with border correction.

    R* = min(edge distance of the strongest node, R_C). Adjacent clusters
    return their members inside R*; with ``aggregate`` each returns partial
    sums instead, which gives the same estimate with one-message payloads.
    The floor is the minimum power over the pooled set; if every pooled weight
    is zero the plain centroid of the pool is used.
    """
    ledger = MessageLedger() if ledger is None else ledger
    c = cluster_set[selected]
    if c.empty:
        raise ProtocolError(f"selected cluster {selected} is empty")
    mem = c.members
    ns = int(mem[np.lexsort((mem, -rss.powers[mem]))[0]])
    ls = dep.measured_positions[ns]
    edge = float(dep.area.edge_distance(ls)[0])
    r_star = max(0.0, min(edge, cluster_set.radius))

    def within(ids):
        d = np.hypot(*(dep.measured_positions[ids] - ls).T)
        return ids[d <= r_star * (1 + 1e-12)]

    pooled = [within(mem)]
    for j in cluster_set.neighbors(selected):
        part = within(cluster_set[j].members)
        d = _head_distance(cluster_set, dep, selected, j)
        ledger.append(c.head, cluster_set[j].head, "poll", d)
        ledger.append(cluster_set[j].head, c.head, "result", d, 1 if aggregate else int(part.size))
        pooled.append(part)
    ids = np.sort(np.concatenate(pooled))
    assert ids.size > 0  # N_S itself is always in the pool

    p = rss.powers[ids]
    pos = dep.measured_positions[ids]
    w = p - p.min()
    if w.sum() > 0:
        if aggregate:
            est = _aggregate_estimate(pooled, rss.powers, dep.measured_positions)
        else:
            est = weighted_centroid(pos, w)
    else:
        w = np.ones_like(p)
        est = pos.mean(axis=0)
    return DwclResult(selected, ns, r_star, Estimate(est, ids, w), ledger)


def _aggregate_estimate(parts, powers, positions) -> np.ndarray:
    # each cluster ships (sum P L, sum L, sum P, n, min P); the head combines them
    spl = np.zeros(2)
    sl = np.zeros(2)
    sp = 0.0
    n = 0
    pmin = np.inf
    for ids in parts:
        if ids.size == 0:
            continue
        p = powers[ids]
        spl += p @ positions[ids]
        sl += positions[ids].sum(axis=0)
        sp += p.sum()
        n += ids.size
        pmin = min(pmin, p.min())
    return (spl - pmin * sl) / (sp - pmin * n)


def form_active_set(cluster_set: ClusterSet, dep: Deployment, rss: RssRealization,
                    threshold: float | None = None) -> tuple:
    """Nonempty clusters, optionally only those with average RSS >= threshold."""
    ids = cluster_set.nonempty
    if threshold is None or threshold == -np.inf:
        return ids
    out = tuple(i for i in ids if rss.powers[cluster_set[i].members].mean() >= threshold)
    if not out:
        raise ProtocolError("no active clusters")
    return out


def mobility_active_set(cluster_set: ClusterSet, previous: int) -> tuple:
    """Previous head cluster and its nonempty neighbours."""
    ids = {previous, *cluster_set.neighbors(previous)}
    return tuple(sorted(i for i in ids if not cluster_set[i].empty))


def run_dwcl(dep: Deployment, rss: RssRealization, cfg: DwclConfig = DwclConfig(),
             cluster_set: ClusterSet | None = None, run: int = 0, previous: int | None = None) -> DwclResult:
    """Both phases with a fresh ledger."""
    cs = build_hex_clusters(dep, cfg.cluster_radius) if cluster_set is None else cluster_set
    if cfg.mobility and previous is not None:
        active = mobility_active_set(cs, previous)
    else:
        active = form_active_set(cs, dep, rss, cfg.threshold)
    cs = cs.with_active(active)
    ledger = MessageLedger(run)
    sel, info = head_cluster_selection(cs, dep, rss, ledger, return_info=True)
    res = modified_wcl(cs, sel, dep, rss, ledger, cfg.aggregate)
    return DwclResult(res.selected, res.strongest, res.r_star, res.estimate, ledger,
                      info["fallback"], info["eta"], len(active))


LEDGER_FIELDS = ["run", "from", "to", "kind", "distance_m"]
RESULT_FIELDS = ["run", "cluster", "Ns", "Rstar", "est_x", "est_y", "error_m"]


def write_ledger_csv(ledgers, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LEDGER_FIELDS)
        for led in ledgers:
            for m in led.entries:
                w.writerow([led.run, m.src, m.dst, m.kind, repr(m.distance)])


def write_result_csv(rows, path) -> None:
    """``rows`` are (run, DwclResult, pu_position)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_FIELDS)
        for run, res, pu in rows:
            x, y = res.estimate.position
            err = math.hypot(x - pu[0], y - pu[1])
            w.writerow([run, res.selected, res.strongest, repr(res.r_star), repr(float(x)), repr(float(y)), repr(err)])


__all__ = [
    "Cluster",
    "ClusterSet",
    "ClusterStats",
    "DwclConfig",
    "DwclResult",
    "MessageLedger",
    "ProtocolError",
    "build_hex_clusters",
    "cluster_statistics",
    "form_active_set",
    "head_cluster_selection",
    "mobility_active_set",
    "modified_wcl",
    "next_cluster",
    "run_dwcl",
    "write_ledger_csv",
    "write_result_csv",
]
