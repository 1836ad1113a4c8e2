"""Independent brute-force oracles used by the test-suite.

None of these share code with the package: they are deliberately naive so
that agreement with the optimised implementations means something.
"""
from __future__ import annotations

import heapq
import itertools
import math
import random


# ---------------------------------------------------------------------------
# shortest paths


def bellman_ford(nodes, edges, source):
    """Single-source distances by plain Bellman-Ford; ``edges`` are undirected (a, b, w)."""
    dist = {n: math.inf for n in nodes}
    dist[source] = 0.0
    for _ in range(len(nodes) - 1):
        changed = False
        for a, b, w in edges:
            for u, v in ((a, b), (b, a)):
                if dist[u] + w < dist[v]:
                    dist[v] = dist[u] + w
                    changed = True
        if not changed:
            break
    return dist


def dijkstra(adj, source):
    """Textbook heap Dijkstra on ``adj[u] = [(v, w), ...]``."""
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, w in adj.get(u, []):
            if d + w < dist.get(v, math.inf):
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return dist


# ---------------------------------------------------------------------------
# travelling salesman


def brute_force_cycle(dist):
    """Shortest closed tour through every index of a square matrix."""
    n = len(dist)
    best = math.inf
    for perm in itertools.permutations(range(1, n)):
        tour = (0, *perm, 0)
        best = min(best, sum(dist[a][b] for a, b in zip(tour, tour[1:])))
    return best


# ---------------------------------------------------------------------------
# radial installation


def best_radial_forest(nodes, edges, sources, demand, cap=None):
    """Minimum-length forest serving every demand node, found exhaustively.

    ``edges`` are undirected ``(a, b, length)``; ``demand`` maps node -> kW.
    Every tree must contain exactly one source and the flow on every edge
    (the demand of the subtree below it) must not exceed ``cap``.
    Returns ``(length, edge_set)`` or ``(inf, None)`` when infeasible.
    """
    sources = set(sources)
    best = [math.inf, None]
    edges = sorted(edges, key=lambda e: e[2])

    def find(parent, x):
        while parent[x] != x:
            x = parent[x]
        return x

    def check(chosen):
        adj = {n: [] for n in nodes}
        for a, b, _ in chosen:
            adj[a].append(b)
            adj[b].append(a)
        seen = set()
        for s in sources:
            # orient from the source and accumulate subtree demand
            order, parent = [s], {s: None}
            for u in order:
                for v in adj[u]:
                    if v != parent[u]:
                        parent[v] = u
                        order.append(v)
            load = {u: demand.get(u, 0.0) for u in order}
            for u in reversed(order[1:]):
                if cap is not None and load[u] > cap + 1e-9:
                    return False
                load[parent[u]] += load[u]
            seen.update(order)
        if any(d > 0 and n not in seen for n, d in demand.items()):
            return False
        # components without a source must be empty
        return all(not adj[n] or n in seen for n in nodes)

    def rec(k, chosen, parent, cost):
        if cost >= best[0] - 1e-12:
            return
        if check(chosen):
            best[0], best[1] = cost, frozenset((a, b) for a, b, _ in chosen)
            return
        for i in range(k, len(edges)):
            a, b, w = edges[i]
            ra, rb = find(parent, a), find(parent, b)
            if ra == rb:
                continue
            if ra in src_roots(parent) and rb in src_roots(parent):
                continue
            p2 = dict(parent)
            # keep a source as representative of its component
            if rb in sources_of(p2):
                p2[ra] = rb
            else:
                p2[rb] = ra
            rec(i + 1, chosen + [(a, b, w)], p2, cost + w)

    def sources_of(parent):
        return {find(parent, s) for s in sources}

    src_roots = sources_of
    rec(0, [], {n: n for n in nodes}, 0.0)
    return best[0], best[1]


def random_flow_problem(rng: random.Random, n_nodes: int, extra_edges: int, n_sources: int = 1):
    """Random connected planar-ish instance: spanning tree plus a few chords."""
    nodes = [f"n{i:02d}" for i in range(n_nodes)]
    edges = {}
    for i in range(1, n_nodes):
        j = rng.randrange(i)
        edges[tuple(sorted((nodes[i], nodes[j])))] = float(rng.randint(5, 60))
    tries = 0
    while len(edges) < n_nodes - 1 + extra_edges and tries < 200:
        tries += 1
        a, b = rng.sample(nodes, 2)
        edges.setdefault(tuple(sorted((a, b))), float(rng.randint(5, 60)))
    sources = sorted(rng.sample(nodes, n_sources))
    demand = {n: float(rng.choice([0, 0, 1, 2, 2, 3, 4.5])) for n in nodes if n not in sources}
    return nodes, [(a, b, w) for (a, b), w in sorted(edges.items())], sources, demand


# ---------------------------------------------------------------------------
# assignment


def min_sum_assignment(cost):
    """Exhaustive minimum-sum one-to-one assignment of rows to columns (rows <= cols)."""
    rows, cols = len(cost), len(cost[0])
    best = (math.inf, None)
    for perm in itertools.permutations(range(cols), rows):
        best = min(best, (sum(cost[r][c] for r, c in enumerate(perm)), perm))
    return best
