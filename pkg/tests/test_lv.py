import math
import random

import pytest

from gridsynth import lv
from gridsynth.errors import CableSizingError, InfeasibleCapacityError, PlanningError, SolverTimeoutError
from gridsynth.fixtures import ORIGIN
from gridsynth.geodata import StreetGraph, offset_point
from gridsynth.loads import LoadEstimate
from gridsynth.mv import Substation

from graphs import flow_instance
from oracles import best_radial_forest, random_flow_problem


def path_instance(cap=None):
    # s --10-- a --10-- b, one kW at each of a and b
    return flow_instance(["s", "a", "b"], [("s", "a", 10.0), ("a", "b", 10.0)], ["s"], {"a": 1.0, "b": 1.0}, cap)


def ring_instance(cap=None):
    # a closed street loop s - a - b - c - s with demands 10, 13 and 20 kW;
    # the best split feeds a+b from one side and c from the other, so the
    # smallest feasible capacity is 23 kW
    edges = [("s", "a", 30.0), ("a", "b", 30.0), ("b", "c", 30.0), ("c", "s", 30.0)]
    return flow_instance(["s", "a", "b", "c"], edges, ["s"], {"a": 10.0, "b": 13.0, "c": 20.0}, cap)


def star_instance(cap=None):
    # everything passes through the single edge s-h: threshold 43 kW
    edges = [("s", "h", 5.0), ("h", "a", 7.0), ("h", "b", 9.0)]
    return flow_instance(["s", "h", "a", "b"], edges, ["s"], {"a": 20.0, "b": 23.0}, cap)


# ---------------------------------------------------------------------------
# instance construction


def small_street():
    """Street a-b-c with a footpath c-d, a station at a and buildings on b-c and c-d."""
    g = StreetGraph()
    for i, n in enumerate("abcd"):
        g.add_node(n, offset_point(ORIGIN, 50 * i, 0))
    g.add_edge("a", "b", 50)
    g.add_edge("b", "c", 50)
    g.add_edge("c", "d", 50, footpath=True)
    for bid, x, (u, v) in (("1", 75, ("b", "c")), ("2", 125, ("c", "d"))):
        conn = f"c:{bid}"
        g.add_node(conn, offset_point(ORIGIN, x, 0), "connection")
        g.g.remove_edge(u, v)
        fp = u == "c"
        g.add_edge(u, conn, x - 50 * "abcd".index(u), footpath=fp)
        g.add_edge(conn, v, 50 * "abcd".index(v) - x, footpath=fp)
        g.add_node(f"b:{bid}", offset_point(ORIGIN, x, 10), "building")
        g.add_edge(conn, f"b:{bid}", 10, kind="service")
    return g


def test_build_instance_residuals_and_edges():
    g = small_street()
    est = [LoadEstimate("1", 2920, 1.0, 2.0, "O2D"), LoadEstimate("2", 5840, 2.0, 4.0, "O2D")]
    inst = lv.build_instance(g, est, [Substation("T1", g.point("a"), "a")])
    assert inst.residual == {"a": 6.0, "b": 0.0, "c:1": -2.0, "c": 0.0, "c:2": -4.0, "d": 0.0}
    assert inst.sources == ["a"] and inst.supply_max == {"a": 6.0}
    assert len(inst.edges) == 2 * 5
    assert not any(n.startswith("b:") for e in inst.edges for n in e)
    inst.validate()
    assert inst.total_demand == 6.0 and inst.demand_nodes == ["c:1", "c:2"]


def test_build_instance_splits_nominal_supply():
    g = small_street()
    est = [LoadEstimate("1", 2920, 1.0, 2.0, "O2D")]
    inst = lv.build_instance(g, est, [Substation("T1", g.point("a"), "a"), Substation("T2", g.point("d"), "d")])
    assert inst.residual["a"] == inst.residual["d"] == 1.0
    assert inst.supply_max == {"a": 2.0, "d": 2.0}


def test_build_instance_footpath_exclusion():
    g = small_street()
    est = [LoadEstimate("1", 2920, 1.0, 2.0, "O2D"), LoadEstimate("2", 5840, 2.0, 4.0, "O2D")]
    stations = [Substation("T1", g.point("a"), "a")]
    # building 2 sits on the footpath, so it has no candidate cable left
    with pytest.raises(PlanningError, match="without a connection node"):
        lv.build_instance(g, est, stations, exclude_footpaths=True)
    with pytest.raises(PlanningError, match="without a connection node"):
        lv.build_instance(g, est + [LoadEstimate("9", 1, 1, 2, "O2D")], stations)
    # a station at the far end of the footpath cannot reach building 1
    with pytest.raises(PlanningError, match="unreachable"):
        lv.build_instance(g, est[:1], [Substation("T1", g.point("d"), "d")], exclude_footpaths=True)


def test_validate_rejects_unbalanced():
    inst = path_instance()
    inst.residual["s"] = 5.0
    with pytest.raises(PlanningError):
        inst.validate()


# ---------------------------------------------------------------------------
# MILP


def test_path_example():
    sol = lv.solve_milp(path_instance(10))
    assert sol.feasible
    assert sol.installed == [("a", "b"), ("s", "a")]
    assert sol.flows == {("s", "a"): 2.0, ("a", "b"): 1.0}
    assert sol.objective == 20.0
    assert lv.check_solution(path_instance(10), sol) == []
    res = lv.solve_milp(path_instance(1))
    assert not res.feasible and not res
    assert res.capacity == 1 and res.demand == 2.0


def test_ring_threshold():
    assert lv.solve_milp(ring_instance(23)).feasible
    assert not lv.solve_milp(ring_instance(22)).feasible
    sol = lv.solve_milp(ring_instance(None))
    # uncapacitated: cheapest is to leave out any single ring edge (all equal), tie broken deterministically
    assert sol.objective == 90.0
    assert sol.installed == lv.solve_milp(ring_instance(None)).installed


def test_zero_demand_instance():
    inst = flow_instance(["s", "a"], [("s", "a", 3.0)], ["s"], {}, 5)
    sol = lv.solve_milp(inst)
    assert sol.feasible and sol.installed == [] and sol.objective == 0.0


def test_two_sources_share_demand():
    # a-b-c line fed from both ends; capacity 6 forces a split
    edges = [("s1", "a", 10.0), ("a", "b", 10.0), ("b", "c", 10.0), ("c", "s2", 10.0)]
    inst = flow_instance(["s1", "a", "b", "c", "s2"], edges, ["s1", "s2"], {"a": 3.0, "b": 3.0, "c": 3.0}, 6)
    sol = lv.solve_milp(inst)
    assert sol.feasible and lv.check_solution(inst, sol) == []
    out = sol.source_outflow()
    assert math.fsum(out.values()) == pytest.approx(9.0)
    assert max(out.values()) <= 6.0 + 1e-9
    assert not lv.solve_milp(inst.with_capacity(4)).feasible


@pytest.mark.parametrize("seed", range(25))
def test_milp_matches_exhaustive_search(seed):
    rng = random.Random(1000 + seed)
    nodes, edges, sources, demand = random_flow_problem(rng, rng.randint(3, 10), rng.randint(0, 4),
                                                         1 if rng.random() < 0.6 else 2)
    total = sum(demand.values())
    cap = rng.choice([None, max(demand.values(), default=0) + 1, total / 2 + 1, total])
    inst = flow_instance(nodes, edges, sources, demand, cap)
    ref, _ = best_radial_forest(nodes, edges, sources, demand, cap)
    sol = lv.solve_milp(inst)
    if math.isinf(ref):
        assert not sol.feasible
    else:
        assert sol.feasible
        assert sol.objective == pytest.approx(ref, abs=1e-6)
        assert lv.check_solution(inst, sol) == []


def test_objective_does_not_decrease_with_capacity():
    rng = random.Random(77)
    for _ in range(5):
        nodes, edges, sources, demand = random_flow_problem(rng, 10, 4, 1)
        inst = flow_instance(nodes, edges, sources, demand)
        prev = 0.0
        for cap in sorted({sum(demand.values()), 12, 9, 7, 5}, reverse=True):
            sol = lv.solve_milp(inst.with_capacity(cap))
            if not sol.feasible:
                break
            assert sol.objective >= prev - 1e-9
            prev = sol.objective


def test_flows_never_exceed_capacity():
    rng = random.Random(5)
    for _ in range(5):
        nodes, edges, sources, demand = random_flow_problem(rng, 11, 5, 2)
        inst = flow_instance(nodes, edges, sources, demand, 6)
        sol = lv.solve_milp(inst)
        if sol.feasible:
            assert max(sol.flows.values(), default=0) <= 6 + 1e-9
            for s, out in sol.source_outflow().items():
                assert 0 <= out <= inst.supply_max[s] + 1e-9


# ---------------------------------------------------------------------------
# capacity estimation


def test_capacity_schedule():
    assert list(lv.capacity_schedule(100))[:15] == [100, 80, 67, 57, 50, 44, 40, 36, 33, 30, 28, 26, 24, 23, 22]
    # the sequence stops once rounding no longer decreases it
    assert list(lv.capacity_schedule(100))[-1] == 13
    assert list(lv.capacity_schedule(100, limit=3)) == [100, 80, 67]
    assert lv.ip_next(100, 1, 9) == 90
    assert lv.round_half_up(2.5) == 3 and lv.round_half_up(3.5) == 4


def test_ip_cce_keeps_last_feasible():
    sol = lv.ip_cce(ring_instance(), 100)
    assert sol.capacity == 23
    assert [h[0] for h in sol.history] == [100, 80, 67, 57, 50, 44, 40, 36, 33, 30, 28, 26, 24, 23, 22]
    assert [h[1] for h in sol.history] == [True] * 14 + [False]
    assert sol.iterations == 15
    assert sol.milp_seconds == pytest.approx(sum(h[2] for h in sol.history))
    assert lv.ip_cce(star_instance(), 100).capacity == 44


def test_nb_cce_finds_threshold():
    assert lv.nb_cce(star_instance(), 100).capacity == 43
    assert lv.nb_cce(ring_instance(), 100).capacity == 23
    sol = lv.nb_cce(path_instance(), 100)
    assert sol.capacity == 2 and sol.history[:2] == [(100, True, sol.history[0][2]), (1, False, sol.history[1][2])]


def test_cce_errors():
    with pytest.raises(InfeasibleCapacityError, match="increase cap0"):
        lv.ip_cce(star_instance(), 40)
    with pytest.raises(InfeasibleCapacityError):
        lv.nb_cce(star_instance(), 40)
    with pytest.raises(ValueError):
        lv.ip_cce(star_instance(), 0)


def test_time_budget():
    free = lv.ip_cce(ring_instance(), 100)
    assert lv.ip_cce(ring_instance(), 100, time_budget=600).installed == free.installed
    assert lv.nb_cce(ring_instance(), 100, time_budget=600).capacity == 23
    for loop in (lv.ip_cce, lv.nb_cce):
        with pytest.raises(SolverTimeoutError) as err:
            loop(ring_instance(), 100, time_budget=0.0)
        assert err.value.seconds == 0.0 and err.value.history == []


# ---------------------------------------------------------------------------
# cables


def test_line_current():
    assert lv.line_current(2.0) == pytest.approx(3.04, abs=5e-3)
    assert lv.line_current(2.0) == pytest.approx(2000 / (math.sqrt(3) * 400 * 0.95), rel=1e-12)


def test_catalog_and_sizing():
    cat = lv.read_catalog()
    assert [c.ampacity_a for c in cat] == [142.0, 270.0, 357.0]
    assert lv.size_cable(2.0, cat).ampacity_a == 142.0
    assert lv.size_cable(lv.max_cable_kw(cat) * 0.999, cat).ampacity_a == 357.0
    assert lv.size_cable(lv.max_cable_kw(cat) * 1.001, cat) is None
    assert math.floor(lv.max_cable_kw(cat)) == 234


def test_assign_cables():
    sol = lv.solve_milp(path_instance(10))
    segs = lv.assign_cables(sol, lv.read_catalog())
    assert [(s.a, s.b, s.flow_kw) for s in segs] == [("a", "b", 1.0), ("s", "a", 2.0)]
    assert all(s.cable.name == "NAYY 4x50 SE" for s in segs)
    big = lv.LvSolution([("s", "a")], {("s", "a"): 500.0}, {("s", "a"): 1.0}, {"s": [("s", "a")]}, None, 1.0)
    with pytest.raises(CableSizingError) as err:
        lv.assign_cables(big, lv.read_catalog())
    assert err.value.edges == [("s", "a")]
