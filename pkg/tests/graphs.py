"""Small street networks and flow instances shared by several test modules."""
from __future__ import annotations

import random

from gridsynth.fixtures import ORIGIN
from gridsynth.geodata import StreetGraph, haversine, offset_point
from gridsynth.lv import FlowInstance
from gridsynth.mv import Substation


def random_street_graph(rng: random.Random, nx_: int = 5, ny_: int = 5, block: float = 80.0,
                        drop: float = 0.25) -> StreetGraph:
    """Jittered grid with some streets removed; always connected.

    Edge lengths are the straight distance times a detour factor in [1, 1.4],
    so shortest-path distances are metric but not Euclidean.
    """
    g = StreetGraph()
    for i in range(nx_):
        for j in range(ny_):
            x = i * block + rng.uniform(-15, 15)
            y = j * block + rng.uniform(-15, 15)
            g.add_node(f"n{i}_{j}", offset_point(ORIGIN, x, y))
    candidates = []
    for i in range(nx_):
        for j in range(ny_):
            if i + 1 < nx_:
                candidates.append((f"n{i}_{j}", f"n{i + 1}_{j}"))
            if j + 1 < ny_:
                candidates.append((f"n{i}_{j}", f"n{i}_{j + 1}"))
    rng.shuffle(candidates)
    # random spanning tree first (union-find), then a share of the remaining streets
    parent = {n: n for n in g.g.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rest = []
    for a, b in candidates:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            _street(g, rng, a, b)
        else:
            rest.append((a, b))
    for a, b in rest:
        if rng.random() > drop:
            _street(g, rng, a, b)
    return g


def _street(g, rng, a, b):
    g.add_edge(a, b, haversine(g.point(a), g.point(b)) * rng.uniform(1.0, 1.4))


def random_stations(rng: random.Random, graph: StreetGraph, k: int) -> tuple[str, list[Substation]]:
    """Pick an HV node plus ``k`` distinct station nodes."""
    chosen = rng.sample(sorted(graph.g.nodes), k + 1)
    hv, rest = chosen[0], chosen[1:]
    stations = [Substation(f"T{i + 1}", graph.point(n), n) for i, n in enumerate(rest)]
    return hv, stations


def flow_instance(nodes, edges, sources, demand, cap=None):
    """FlowInstance from an undirected edge list ``(a, b, length)`` and a demand map."""
    total = sum(demand.values())
    residual = {n: -demand.get(n, 0.0) for n in nodes}
    for s in sources:
        residual[s] = total / len(sources)
    arcs, cost = [], {}
    for a, b, w in edges:
        arcs += [(a, b), (b, a)]
        cost[a, b] = cost[b, a] = w
    return FlowInstance(list(nodes), residual, list(sources), {s: total for s in sources}, arcs, cost, cap)
