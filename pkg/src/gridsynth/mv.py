"""Medium-voltage stage: transformer count, station placement and ring routing."""
from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import NoPathError, PlanningError
from .geodata import GeoPoint, StreetGraph, attach_point, from_local_xy, haversine, shortest_paths_from, to_local_xy

logger = logging.getLogger(__name__)

DEPOT = "HV"


@dataclass(frozen=True)
class TransformerParams:
    power_factor: float = 0.95
    rating_kva: float = 630.0
    target_loading: float = 0.5

    def __post_init__(self):
        if not (0 < self.power_factor <= 1 and 0 < self.target_loading <= 1 and self.rating_kva > 0):
            raise ValueError("invalid transformer parameters")

    @property
    def usable_kw(self) -> float:
        return self.power_factor * self.rating_kva * self.target_loading


@dataclass
class Substation:
    id: str
    location: GeoPoint
    graph_node: str | None = None
    source: str = "computed"
    center: GeoPoint | None = None  # k-means centre before snapping


@dataclass
class MvRing:
    sequence: list[str]  # station ids, starting and ending with DEPOT
    nodes: list[str]  # graph node of each entry in ``sequence``
    hop_paths: list[list[str]] = field(default_factory=list)
    hop_lengths: list[float] = field(default_factory=list)

    @property
    def length(self) -> float:
        return math.fsum(self.hop_lengths)

    def degrees(self) -> dict[str, int]:
        deg: dict[str, int] = {}
        for a, b in zip(self.sequence, self.sequence[1:]):
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        return deg


def transformer_count(estimates, params: TransformerParams = TransformerParams()) -> int:
    """Number of secondary substations needed for the summed peak load."""
    if not estimates:
        raise PlanningError("no load estimates")
    total = math.fsum(e.peak_kw for e in estimates)
    ratio = total / params.usable_kw
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-12 * max(1.0, ratio):
        ratio = nearest
    return max(1, math.ceil(ratio))


# ---------------------------------------------------------------------------
# weighted k-means


@dataclass
class KMeansResult:
    centers: np.ndarray  # (k, 2) local xy
    labels: np.ndarray
    inertia: float


def _kmeanspp(x, w, k, rng):
    n = len(x)
    centers = np.empty((k, 2))
    centers[0] = x[rng.choice(n, p=w / w.sum())]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        p = w * d2
        if p.sum() <= 0:
            p = w.copy()
        centers[j] = x[rng.choice(n, p=p / p.sum())]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(x, w, centers, max_iter):
    labels = None
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        for j in range(len(centers)):
            mask = new == j
            mass = w[mask].sum()
            if mass > 0:
                centers[j] = (w[mask, None] * x[mask]).sum(axis=0) / mass
            else:
                # empty cluster: reseed at the point farthest from its own centre
                far = int(np.argmax(d2[np.arange(len(x)), new] * (w > 0)))
                centers[j] = x[far]
                new[far] = j
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return centers, labels, float((w * d2[np.arange(len(x)), labels]).sum())


def weighted_kmeans(x, weights, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm with weighted k-means++ seeding and restarts.

    The restart with the lowest weighted within-cluster sum of squares wins;
    ties keep the earliest restart.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(weights, dtype=float)
    if k < 1:
        raise PlanningError("k must be at least 1")
    if k > int((w > 0).sum()):
        raise PlanningError(f"k={k} exceeds the number of weighted points ({int((w > 0).sum())})")
    best = None
    for r in range(n_init):
        rng = np.random.default_rng([seed, r])
        centers, labels, inertia = _lloyd(x, w, _kmeanspp(x, w, k, rng), max_iter)
        if best is None or inertia < best.inertia - 1e-9 * max(1.0, best.inertia):
            best = KMeansResult(centers, labels, inertia)
    return best


def place_substations(buildings, estimates, k: int, graph: StreetGraph, seed: int = 0,
                      n_init: int = 10) -> list[Substation]:
    """Place ``k`` stations by unit-weighted k-means and snap them to street nodes.

    Stations snap to the nearest plain street node (never to a building,
    connection or HV node); each node hosts at most one station.
    """
    units = {e.building_id: e.units for e in estimates}
    members = [b for b in buildings if units.get(b.id, 0) > 0]
    if k > len(buildings):
        raise PlanningError(f"k={k} exceeds the number of buildings ({len(buildings)})")
    pts = [b.centroid for b in members]
    origin = GeoPoint(float(np.mean([p.lat for p in pts])), float(np.mean([p.lon for p in pts])))
    res = weighted_kmeans(to_local_xy(pts, origin), [units[b.id] for b in members], k, seed, n_init)
    centers = [from_local_xy(cx, cy, origin) for cx, cy in res.centers]
    centers.sort(key=lambda p: (p.lon, p.lat))

    candidates = [n for n, d in graph.g.nodes(data=True) if d["kind"] == "street" and n != graph.substation_node]
    cand_pts = [graph.point(n) for n in candidates]
    used: set[str] = set()
    stations = []
    for i, c in enumerate(centers, start=1):
        xy = to_local_xy(cand_pts, c)
        order = np.argsort(np.hypot(xy[:, 0], xy[:, 1]), kind="stable")
        node = next(candidates[j] for j in order if candidates[j] not in used)
        used.add(node)
        stations.append(Substation(f"T{i}", graph.point(node), node, "computed", c))
    return stations


def read_known_stations(path) -> list[Substation]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [Substation(r["station_id"].strip(), GeoPoint(float(r["lat"]), float(r["lon"])), None, "known") for r in rows]


def attach_stations(graph: StreetGraph, stations, exclude_footpaths: bool = False) -> list[Substation]:
    """Attach known stations onto their nearest road edge (mutates ``graph``)."""
    out = []
    for s in stations:
        node = f"s:{s.id}"
        attach_point(graph, s.location, node, "station", exclude_footpaths)
        out.append(Substation(s.id, s.location, node, s.source, s.center))
    return out


# ---------------------------------------------------------------------------
# ring routing


def tour_length(dist, tour) -> float:
    return math.fsum(dist[a][b] for a, b in zip(tour, tour[1:]))


def christofides(dist) -> list[int]:
    """Closed tour (starting and ending at index 0) over a metric matrix."""
    n = len(dist)
    if n == 1:
        return [0, 0]
    if n == 2:
        return [0, 1, 0]
    g = nx.Graph()
    for i, j in itertools.combinations(range(n), 2):
        g.add_edge(i, j, weight=float(dist[i][j]))
    mst = nx.minimum_spanning_tree(g, weight="weight", algorithm="kruskal")
    odd = sorted(v for v, deg in mst.degree() if deg % 2)
    matching = nx.min_weight_matching(g.subgraph(odd), weight="weight")
    multi = nx.MultiGraph(mst)
    multi.add_edges_from(sorted(tuple(sorted(e)) for e in matching))
    tour, seen = [], set()
    for u, _ in nx.eulerian_circuit(multi, source=0):
        if u not in seen:
            seen.add(u)
            tour.append(u)
    return tour + [0]


def brute_force_tour(dist) -> tuple[float, list[int]]:
    """Exact optimum by enumerating permutations (small n only)."""
    n = len(dist)
    best = (math.inf, None)
    for perm in itertools.permutations(range(1, n)):
        if n > 2 and perm[0] > perm[-1]:
            continue  # each undirected cycle once
        t = [0, *perm, 0]
        best = min(best, (tour_length(dist, t), t))
    return best


def distance_matrix(graph: StreetGraph, nodes: list[str]):
    """Pairwise shortest-path lengths and paths between ``nodes``."""
    dist = np.zeros((len(nodes), len(nodes)))
    paths = {}
    for i, a in enumerate(nodes):
        found = shortest_paths_from(graph, a, nodes[i + 1:])
        for j in range(i + 1, len(nodes)):
            b = nodes[j]
            if b not in found:
                raise NoPathError(f"{b!r} unreachable from {a!r}")
            d, p = found[b]
            dist[i, j] = dist[j, i] = d
            paths[i, j] = p
            paths[j, i] = p[::-1]
    return dist, paths


def build_ring(stations, hv_node: str, graph: StreetGraph) -> MvRing:
    """Route a single 20 kV ring through every station, starting at the HV node."""
    ordered = sorted(stations, key=lambda s: s.id)
    nodes = [hv_node] + [s.graph_node for s in ordered]
    ids = [DEPOT] + [s.id for s in ordered]
    try:
        dist, paths = distance_matrix(graph, nodes)
    except NoPathError as exc:
        raise NoPathError(f"station unreachable from the HV/MV substation: {exc}") from exc
    tour = christofides(dist) if len(nodes) > 1 else [0]
    ring = MvRing([ids[i] for i in tour], [nodes[i] for i in tour])
    for a, b in zip(tour, tour[1:]):
        ring.hop_paths.append(paths[a, b] if a != b else [nodes[a]])
        ring.hop_lengths.append(float(dist[a, b]))
    return ring


def straight_line_span(points) -> float:
    """Largest pairwise great-circle distance among ``points``."""
    return max((haversine(p, q) for p, q in itertools.combinations(points, 2)), default=0.0)
