"""Low-voltage stage: radial feeder synthesis by a fixed-charge min-cost-flow MILP.

The program chooses which street segments carry cables (binary ``install``
per directed edge) and how much power flows over them.  Demand nodes must be
served, each node may have at most one installed incoming edge (radiality),
and flows are bounded by a uniform cable capacity.  The capacity is then
shrunk iteratively (:func:`ip_cce`, or :func:`nb_cce` for comparison) until
the program becomes infeasible; the last feasible layout is kept.

Each secondary substation may export anything between zero and the total
demand: the program itself decides how demand is split between stations.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from .errors import CableSizingError, InfeasibleCapacityError, PlanningError, SolverTimeoutError

logger = logging.getLogger(__name__)

FLOW_TOL = 1e-6
# Total cost perturbation (m) used to make equal-cost optima deterministic.
TIE_BREAK_BUDGET = 1e-4


@dataclass
class FlowInstance:
    """Candidate cable network for one MILP.

    ``residual`` is positive at sources (their nominal equal share of the
    demand), negative at consumers and zero at pass-through nodes.  Each
    source may actually export anything in ``[0, supply_max[s]]``.
    ``edges`` holds both directions of every candidate segment.
    """

    nodes: list[str]
    residual: dict[str, float]
    sources: list[str]
    supply_max: dict[str, float]
    edges: list[tuple[str, str]]
    cost: dict[tuple[str, str], float]
    cap_max: float | None = None

    @property
    def total_demand(self) -> float:
        return math.fsum(-r for n, r in self.residual.items() if r < 0)

    @property
    def demand_nodes(self) -> list[str]:
        return [n for n in self.nodes if self.residual[n] < 0]

    def with_capacity(self, cap) -> "FlowInstance":
        return replace(self, cap_max=cap)

    def validate(self):
        if abs(math.fsum(self.residual.values())) > FLOW_TOL:
            raise PlanningError("residuals do not balance")
        es = set(self.edges)
        for a, b in self.edges:
            if (b, a) not in es or self.cost[a, b] != self.cost[b, a]:
                raise PlanningError(f"edge {a}->{b} lacks a symmetric twin")


@dataclass
class LvSolution:
    installed: list[tuple[str, str]]  # directed parent -> child
    flows: dict[tuple[str, str], float]
    lengths: dict[tuple[str, str], float]
    trees: dict[str, list[tuple[str, str]]]  # source -> its installed edges
    capacity: float | None
    objective: float
    iterations: int = 1
    milp_seconds: float = 0.0
    history: list = field(default_factory=list)

    feasible = True

    def source_outflow(self) -> dict[str, float]:
        return {s: math.fsum(self.flows[e] for e in edges if e[0] == s) for s, edges in self.trees.items()}


@dataclass
class Infeasible:
    reason: str
    capacity: float | None
    demand: float
    milp_seconds: float = 0.0

    feasible = False

    def __bool__(self):
        return False


# ---------------------------------------------------------------------------
# instance construction


def build_instance(graph, estimates, substations, exclude_footpaths: bool = False) -> FlowInstance:
    """Flow instance over the road edges of an attached street graph.

    Building demand (``-P_peak``) sits on each building's connection node.
    """
    sources = sorted(s.graph_node for s in substations)
    residual: dict[str, float] = {}
    edges, cost = [], {}
    for a, b, d in graph.edges("road"):
        if exclude_footpaths and d["footpath"]:
            continue
        for u, v in ((a, b), (b, a)):
            edges.append((u, v))
            cost[u, v] = d["length"]
        residual.setdefault(a, 0.0)
        residual.setdefault(b, 0.0)
    for s in sources:
        residual.setdefault(s, 0.0)
    missing = []
    for e in estimates:
        node = f"c:{e.building_id}"
        if node not in residual:
            missing.append(e.building_id)
            continue
        residual[node] -= e.peak_kw
    if missing:
        raise PlanningError(f"buildings without a connection node on the candidate network: {missing}")
    demand = math.fsum(-r for r in residual.values() if r < 0)
    for s in sources:
        residual[s] += demand / len(sources)
    inst = FlowInstance(list(residual), residual, sources, {s: demand for s in sources}, edges, cost)
    unreachable = _unreachable_demand(inst)
    if unreachable:
        raise PlanningError(f"demand nodes unreachable from every substation: {unreachable}")
    return inst


def _adjacency(nodes, edges):
    adj = {n: [] for n in nodes}
    for a, b in edges:
        adj[a].append(b)
    return adj


def _unreachable_demand(inst: FlowInstance):
    adj = _adjacency(inst.nodes, inst.edges)
    seen = set(inst.sources)
    stack = list(inst.sources)
    while stack:
        for m in adj[stack.pop()]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return [n for n in inst.demand_nodes if n not in seen]


# ---------------------------------------------------------------------------
# presolve: prune dead ends, then collapse series chains into configurations
#
# Between two branch points (degree != 2, or a source) every candidate street
# run is a chain of series nodes.  In an optimal radial layout such a chain is
# either fed straight through from one end, or split at a single gap between
# two consecutive demand nodes and fed from both ends (installing anything
# else only adds length).  Each chain therefore becomes one small set of
# mutually exclusive binaries whose flows are known up front, which makes the
# program far tighter than the arc formulation without changing its optimum.


@dataclass
class _Chain:
    path: list[str]  # original nodes from end a to end b
    demand: list[float]  # demand of path[1:-1]
    cost_ab: float  # perturbed cost of the through configurations
    cost_ba: float
    gaps: list[tuple[int, int, float, float, float]]  # (last fed from a, first fed from b, from_a, from_b, cost)

    @property
    def a(self):
        return self.path[0]

    @property
    def b(self):
        return self.path[-1]

    @property
    def internal(self) -> float:
        return math.fsum(self.demand)

    def arcs_through(self, forward: bool):
        p = self.path if forward else self.path[::-1]
        return list(zip(p, p[1:]))

    def arcs_gap(self, i: int, j: int):
        p = self.path
        return list(zip(p[:i], p[1:i + 1])) + [(p[k + 1], p[k]) for k in range(len(p) - 2, j - 1, -1)]


def _arc_weights(inst: FlowInstance) -> dict[tuple[str, str], float]:
    """Arc cost plus a tiny rank-based perturbation favouring smaller arc ids."""
    arcs = sorted(inst.edges)
    n = len(arcs)
    scale = TIE_BREAK_BUDGET / (n * (n + 1) / 2) if n else 0.0
    return {e: inst.cost[e] + scale * (k + 1) for k, e in enumerate(arcs)}


def _chains(inst: FlowInstance) -> tuple[list[str], list[_Chain]]:
    src = set(inst.sources)
    nbrs: dict[str, set[str]] = {n: set() for n in inst.nodes}
    for a, b in inst.edges:
        nbrs[a].add(b)
    work = [n for n in inst.nodes if len(nbrs[n]) <= 1]
    while work:
        n = work.pop()
        if n in src or inst.residual[n] != 0 or n not in nbrs or len(nbrs[n]) > 1:
            continue
        for m in nbrs.pop(n):
            nbrs[m].discard(n)
            work.append(m)
    ends = {n for n, adj in nbrs.items() if n in src or len(adj) != 2}
    w = _arc_weights(inst)
    seen: set[tuple[str, str]] = set()
    chains = []

    def walk(a, first):
        path = [a, first]
        while path[-1] not in ends:
            prev, cur = path[-2], path[-1]
            path.append(next(m for m in sorted(nbrs[cur]) if m != prev))
        return path

    def walk_from(a):
        for first in sorted(nbrs[a]):
            if (a, first) in seen:
                continue
            path = walk(a, first)
            for u, v in zip(path, path[1:]):
                seen.add((u, v))
                seen.add((v, u))
            chains.append(_make_chain(path, inst, w))

    for a in sorted(ends):
        walk_from(a)
    for n in sorted(nbrs):
        if any((n, m) not in seen for m in nbrs[n]):
            # a cycle without any branch point: open it at its smallest node
            ends.add(n)
            walk_from(n)
    return sorted(ends), chains


def _make_chain(path, inst, w) -> _Chain:
    fwd = [w[u, v] for u, v in zip(path, path[1:])]
    bwd = [w[v, u] for u, v in zip(path, path[1:])]
    demand = [-min(inst.residual[n], 0.0) for n in path[1:-1]]
    last = len(path) - 1
    marks = [0] + [k + 1 for k, d in enumerate(demand) if d > 0] + [last]
    gaps = []
    for i, j in zip(marks, marks[1:]):
        cost = math.fsum(fwd[:i]) + math.fsum(bwd[j:])
        gaps.append((i, j, math.fsum(demand[:i]), math.fsum(demand[j - 1:]), cost))
    return _Chain(list(path), demand, math.fsum(fwd), math.fsum(bwd), gaps)


# ---------------------------------------------------------------------------
# exact solve


def _quick_infeasibility(inst: FlowInstance, cap) -> str | None:
    if cap is None:
        return None
    worst = max((-inst.residual[n] for n in inst.demand_nodes), default=0.0)
    if worst > cap + FLOW_TOL:
        return f"single demand of {worst:.6g} kW exceeds capacity {cap} kW"
    deg = {s: 0 for s in inst.sources}
    for a, _ in inst.edges:
        if a in deg:
            deg[a] += 1
    supply = math.fsum(min(deg[s] * cap, inst.supply_max[s]) for s in inst.sources)
    if supply + FLOW_TOL < inst.total_demand:
        return f"source cut: at most {supply:.6g} kW can leave the substations, demand is {inst.total_demand:.6g} kW"
    return None


def solve_milp(inst: FlowInstance, time_limit: float = 300.0) -> LvSolution | Infeasible:
    """Proven-optimal radial installation for ``inst`` at its ``cap_max``.

    Returns :class:`Infeasible` when no radial layout respects the capacity.
    Equal-cost optima are resolved by a tiny cost perturbation that prefers
    lexicographically smaller edges.
    """
    t0 = time.perf_counter()
    cap = inst.cap_max
    demand = inst.total_demand
    if demand <= FLOW_TOL:
        return LvSolution([], {}, {}, {s: [] for s in inst.sources}, cap, 0.0, milp_seconds=time.perf_counter() - t0)
    reason = _quick_infeasibility(inst, cap)
    if reason:
        return Infeasible(reason, cap, demand, time.perf_counter() - t0)
    limit = demand if cap is None else min(float(cap), demand)

    ends, chains = _chains(inst)
    idx = {n: i for i, n in enumerate(ends)}
    srcs = [s for s in inst.sources if s in idx]
    # column layout: per chain [t_ab, t_ba, f_ab, f_ba, g_0 .. g_m]; then one export per source
    cols, c, ub, integrality = [], [], [], []
    for ch in chains:
        loop = ch.a == ch.b
        through_ok = not loop and ch.internal <= limit + FLOW_TOL
        base = len(c)
        gap_ok = [fa <= limit + FLOW_TOL and fb <= limit + FLOW_TOL for _, _, fa, fb, _ in ch.gaps]
        if not through_ok and not any(gap_ok):
            return Infeasible(f"demand along {ch.a}..{ch.b} cannot be served within {cap} kW", cap, demand,
                              time.perf_counter() - t0)
        c += [ch.cost_ab, ch.cost_ba, 0.0, 0.0] + [g[4] for g in ch.gaps]
        ub += [float(through_ok)] * 2 + [limit if through_ok else 0.0] * 2 + [float(ok) for ok in gap_ok]
        integrality += [1, 1, 0, 0] + [1] * len(ch.gaps)
        cols.append(base)
    n_var = len(c) + len(srcs)
    c += [0.0] * len(srcs)
    ub += [inst.supply_max[s] for s in srcs]
    integrality += [0] * len(srcs)

    rows, cidx, vals, lo, hi = [], [], [], [], []

    def put(r, col, v):
        rows.append(r)
        cidx.append(col)
        vals.append(v)

    n_end = len(ends)
    # rows [0, n_end): conservation  out - in (- export) = residual
    # rows [n_end, 2 n_end): in-degree <= 1, = 0 at sources
    for ch, base in zip(chains, cols):
        a, b = idx[ch.a], idx[ch.b]
        put(a, base + 2, 1.0)                   # f_ab leaves a
        put(b, base + 2, -1.0)                  # ... and what is left enters b
        put(b, base + 0, ch.internal)
        put(b, base + 3, 1.0)
        put(a, base + 3, -1.0)
        put(a, base + 1, ch.internal)
        for k, (_, _, fa, fb, _) in enumerate(ch.gaps):
            if fa:
                put(a, base + 4 + k, fa)
            if fb:
                put(b, base + 4 + k, fb)
        put(n_end + b, base + 0, 1.0)
        put(n_end + a, base + 1, 1.0)
    for j, s in enumerate(srcs):
        put(idx[s], len(c) - len(srcs) + j, -1.0)
    for n in ends:
        rhs = 0.0 if n in inst.supply_max else inst.residual[n]
        lo.append(rhs)
        hi.append(rhs)
    for n in ends:
        lo.append(1.0 if inst.residual[n] < 0 else -np.inf)
        hi.append(0.0 if n in inst.supply_max else 1.0)
    r = 2 * n_end
    # per chain: exactly one configuration; through flow within [internal, limit] when chosen
    for ch, base in zip(chains, cols):
        for k in [0, 1] + [4 + g for g in range(len(ch.gaps))]:
            put(r, base + k, 1.0)
        lo.append(1.0)
        hi.append(1.0)
        r += 1
        for t, f in ((0, 2), (1, 3)):
            put(r, base + f, 1.0)
            put(r, base + t, -limit)
            lo.append(-np.inf)
            hi.append(0.0)
            put(r + 1, base + f, 1.0)
            put(r + 1, base + t, -ch.internal)
            lo.append(0.0)
            hi.append(np.inf)
            r += 2

    # connectivity: a chain may only draw from a non-source end that is itself fed
    src = set(inst.supply_max)
    for ch, base in zip(chains, cols):
        for end, t, side in ((ch.a, 0, 2), (ch.b, 1, 3)):
            if end in src:
                continue
            put(r, base + t, 1.0)
            for k, g in enumerate(ch.gaps):
                if g[side] > 0:
                    put(r, base + 4 + k, 1.0)
            for ch2, base2 in zip(chains, cols):
                if ch2.b == end:
                    put(r, base2 + 0, -1.0)
                if ch2.a == end:
                    put(r, base2 + 1, -1.0)
            lo.append(-np.inf)
            hi.append(0.0)
            r += 1

    # rounded capacity cut: enough feeders must leave the substations to carry all demand
    if cap is not None:
        coef: dict[int, float] = {}
        for ch, base in zip(chains, cols):
            a_src, b_src = ch.a in src, ch.b in src
            if a_src:
                coef[base] = coef.get(base, 0.0) + 1.0
            if b_src:
                coef[base + 1] = coef.get(base + 1, 0.0) + 1.0
            for k, g in enumerate(ch.gaps):
                m = (a_src and g[2] > 0) + (b_src and g[3] > 0)
                if m:
                    coef[base + 4 + k] = float(m)
        for col, v in sorted(coef.items()):
            put(r, col, v)
        lo.append(float(math.ceil(demand / float(cap) - FLOW_TOL)))
        hi.append(np.inf)
        r += 1

    A = coo_matrix((vals, (rows, cidx)), shape=(r, n_var)).tocsr()
    res = milp(np.asarray(c), constraints=LinearConstraint(A, lo, hi), bounds=Bounds(np.zeros(n_var), np.asarray(ub)),
               integrality=np.asarray(integrality), options={"time_limit": time_limit, "mip_rel_gap": 1e-9})
    seconds = time.perf_counter() - t0
    if res.status == 2:
        return Infeasible("MILP infeasible", cap, demand, seconds)
    if res.status == 1:
        raise SolverTimeoutError(f"MILP hit the {time_limit:.6g} s limit at capacity {cap} without proving optimality",
                                 seconds)
    if res.status != 0:
        raise PlanningError(f"MILP solver failed: {res.message}")

    installed = []
    for ch, base in zip(chains, cols):
        x = res.x
        if x[base] > 0.5:
            installed += ch.arcs_through(True)
        elif x[base + 1] > 0.5:
            installed += ch.arcs_through(False)
        else:
            for k, (i, j, _, _, _) in enumerate(ch.gaps):
                if x[base + 4 + k] > 0.5:
                    installed += ch.arcs_gap(i, j)
    return _expand(inst, installed, cap, seconds)


def _expand(inst, installed, cap, seconds) -> LvSolution:
    """Attach exact tree flows (subtree demand sums) to the installed arcs."""
    lengths = {e: inst.cost[e] for e in installed}
    children: dict[str, list[str]] = {}
    parent = {}
    for u, v in installed:
        children.setdefault(u, []).append(v)
        if v in parent:
            raise PlanningError(f"node {v} has two installed feeders")
        parent[v] = u
    flows: dict[tuple[str, str], float] = {}

    def subtree(n):
        # iterative post-order: flow into n = own demand + children's flows
        total = {}
        stack = [(n, False)]
        while stack:
            x, done = stack.pop()
            if done:
                total[x] = -min(inst.residual.get(x, 0.0), 0.0) + math.fsum(total[ch] for ch in children.get(x, []))
                for ch in children.get(x, []):
                    flows[x, ch] = total[ch]
            else:
                stack.append((x, True))
                stack.extend((ch, False) for ch in children.get(x, []))
        return total[n]

    trees = {}
    for s in inst.sources:
        subtree(s)
        members, stack = [], [s]
        while stack:
            x = stack.pop()
            for ch in children.get(x, []):
                members.append((x, ch))
                stack.append(ch)
        trees[s] = sorted(members)
    in_tree = {e for es in trees.values() for e in es}
    orphans = [e for e in installed if e not in in_tree]
    if orphans:
        raise PlanningError(f"installed edges not reachable from any substation: {orphans[:5]}")
    installed = sorted(installed)
    objective = math.fsum(lengths[e] for e in installed)
    return LvSolution(installed, {e: flows[e] for e in installed}, lengths, trees, cap, objective,
                      milp_seconds=seconds)


def check_solution(inst: FlowInstance, sol: LvSolution, tol: float = FLOW_TOL) -> list[str]:
    """Return a list of violated constraints (empty when the solution is valid)."""
    problems = []
    indeg: dict[str, int] = {}
    for _, v in sol.installed:
        indeg[v] = indeg.get(v, 0) + 1
    problems += [f"node {n} has {d} feeders" for n, d in indeg.items() if d > 1]
    problems += [f"source {s} is fed" for s in inst.sources if indeg.get(s, 0)]
    net = {n: 0.0 for n in inst.nodes}
    for (u, v), f in sol.flows.items():
        net[u] += f
        net[v] -= f
        if f < -tol or (sol.capacity is not None and f > sol.capacity + tol):
            problems.append(f"flow {f} on {u}->{v} violates [0, {sol.capacity}]")
    src = set(inst.sources)
    for n in inst.nodes:
        if n in src:
            if net[n] < -tol or net[n] > inst.supply_max[n] + tol:
                problems.append(f"source {n} exports {net[n]}")
        elif abs(net[n] - inst.residual[n]) > tol:
            problems.append(f"conservation violated at {n}: {net[n]} vs {inst.residual[n]}")
    covered = {v for es in sol.trees.values() for _, v in es}
    problems += [f"demand node {n} not supplied" for n in inst.demand_nodes if n not in covered]
    return problems


# ---------------------------------------------------------------------------
# capacity estimation loops


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def ip_next(cap: int, i: int, n: int = 4) -> int:
    """Capacity for iteration ``i + 1`` given the capacity of iteration ``i`` (i >= 1)."""
    return round_half_up(cap * (1.0 - 1.0 / (i + n)))


def capacity_schedule(cap0: int, n: int = 4, limit: int | None = None):
    """Yield the inverse-proportional capacity sequence until it stops decreasing."""
    cap, i = int(cap0), 1
    while True:
        yield cap
        nxt = ip_next(cap, i, n)
        if nxt >= cap or (limit is not None and i >= limit):
            return
        cap, i = nxt, i + 1


class _Prober:
    """Solve one capacity after another, keeping the history and total MILP time.

    With a ``budget`` the per-probe time limit shrinks so that the cumulative
    MILP time never exceeds it; running out raises :class:`SolverTimeoutError`
    whose ``seconds`` is the total spent so far.
    """

    def __init__(self, inst, time_limit, budget):
        self.inst, self.time_limit, self.budget = inst, time_limit, budget
        self.history, self.total = [], 0.0

    def __call__(self, cap):
        limit = self.time_limit
        if self.budget is not None:
            limit = min(limit, self.budget - self.total)
            if limit <= 0:
                raise SolverTimeoutError(f"time budget of {self.budget:.6g} s used up before capacity {cap}",
                                         self.total, self.history)
        try:
            res = solve_milp(self.inst.with_capacity(cap), limit)
        except SolverTimeoutError as exc:
            self.total += exc.seconds
            self.history.append((cap, None, exc.seconds))
            raise SolverTimeoutError(str(exc), self.total, self.history) from exc
        self.total += res.milp_seconds
        self.history.append((cap, res.feasible, res.milp_seconds))
        return res

    def finish(self, best):
        best.iterations, best.milp_seconds, best.history = len(self.history), self.total, self.history
        return best


def ip_cce(inst: FlowInstance, cap0: int, n: int = 4, time_limit: float = 300.0,
           time_budget: float | None = None) -> LvSolution:
    """Shrink the cable capacity along :func:`capacity_schedule` until infeasible.

    Returns the solution of the last feasible capacity.
    """
    if cap0 < 1:
        raise ValueError("cap0 must be at least 1")
    probe = _Prober(inst, time_limit, time_budget)
    best = None
    for cap in capacity_schedule(cap0, n):
        res = probe(cap)
        logger.debug("IP-CCE capacity %s kW: %s", cap, "feasible" if res.feasible else res.reason)
        if not res.feasible:
            break
        best = res
    if best is None:
        raise InfeasibleCapacityError(f"infeasible at cap0={cap0} kW; increase cap0 ({probe.history[0]})")
    return probe.finish(best)


def nb_cce(inst: FlowInstance, cap0: int, cap_min: int = 1, time_limit: float = 300.0,
           time_budget: float | None = None) -> LvSolution:
    """Integer bisection for the lowest feasible capacity in ``[cap_min, cap0]``."""
    probe = _Prober(inst, time_limit, time_budget)
    best = probe(int(cap0))
    if not best.feasible:
        raise InfeasibleCapacityError(f"infeasible at cap0={cap0} kW; increase cap0")
    hi, lo = int(cap0), int(cap_min)
    if lo < hi:
        low = probe(lo)
        if low.feasible:
            best, hi = low, lo
        while hi - lo > 1:
            mid = (lo + hi) // 2
            res = probe(mid)
            logger.debug("NB-CCE capacity %s kW: %s", mid, "feasible" if res.feasible else res.reason)
            if res.feasible:
                best, hi = res, mid
            else:
                lo = mid
    return probe.finish(best)


# ---------------------------------------------------------------------------
# cables


@dataclass(frozen=True)
class Cable:
    name: str
    ampacity_a: float
    r_ohm_per_km: float
    x_ohm_per_km: float
    u_nominal_kv: float


@dataclass
class CableSegment:
    a: str
    b: str
    length_m: float
    flow_kw: float
    current_a: float
    cable: Cable


def read_catalog(path=None) -> list[Cable]:
    if path is None:
        path = resources.files("gridsynth") / "data" / "cables.json"
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not entries:
        raise PlanningError("cable catalog is empty")
    cables = [Cable(e["name"], float(e["ampacity_A"]), float(e["r_ohm_per_km"]), float(e["x_ohm_per_km"]),
                    float(e["u_nominal_kV"])) for e in entries]
    return sorted(cables, key=lambda c: (c.ampacity_a, c.name))


def line_current(p_kw: float, u_kv: float = 0.4, power_factor: float = 0.95) -> float:
    """Three-phase line current in A for active power ``p_kw``."""
    return p_kw / (math.sqrt(3) * u_kv * power_factor)


def size_cable(p_kw: float, catalog, u_kv: float = 0.4, power_factor: float = 0.95) -> Cable | None:
    current = line_current(p_kw, u_kv, power_factor)
    for cable in sorted(catalog, key=lambda c: (c.ampacity_a, c.name)):
        if cable.ampacity_a >= current:
            return cable
    return None


def assign_cables(solution: LvSolution, catalog, power_factor: float = 0.95, u_kv: float = 0.4) -> list[CableSegment]:
    """Smallest sufficient catalog cable for every installed edge."""
    segments, too_big = [], []
    for e in solution.installed:
        flow = solution.flows[e]
        cable = size_cable(flow, catalog, u_kv, power_factor)
        if cable is None:
            too_big.append(e)
            continue
        segments.append(CableSegment(e[0], e[1], solution.lengths[e], flow, line_current(flow, u_kv, power_factor), cable))
    if too_big:
        raise CableSizingError(f"{len(too_big)} edge(s) exceed the largest cable: {too_big[:5]}", too_big)
    return segments


def max_cable_kw(catalog, power_factor: float = 0.95, u_kv: float = 0.4) -> float:
    return max(c.ampacity_a for c in catalog) * math.sqrt(3) * u_kv * power_factor
