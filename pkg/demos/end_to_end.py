"""Walk through the pipeline stage by stage on the bundled 40-building town.

Run with ``python demos/end_to_end.py``.  The last step repeats the whole run
through :func:`gridsynth.pipeline.run_variant` and writes into a temporary
directory.
"""
import logging
import math
import tempfile

from gridsynth import fixtures, geodata, loads, lv, mv, pipeline

logging.basicConfig(level=logging.WARNING)

cfg = pipeline.load_config(fixtures.bundled_config())

# ingest: street graph, building footprints and the measured heights
graph, buildings = geodata.read_overpass(cfg.overpass)
buildings = geodata.load_heights(buildings, geodata.read_height_table(cfg.heights))
print(f"{len(buildings)} buildings, {graph.g.number_of_nodes()} street nodes")

# load estimation from footprints and heights
estimates = loads.estimate_all(loads.EstimationParams(), buildings, "O3D")
print(f"total peak {loads.total_peak(estimates):.1f} kW over {len(estimates)} supplied buildings")

# 20 kV stage: transformer count, placement on the street network, ring
supplied_ids = {e.building_id for e in estimates}
supplied = [b for b in buildings if b.id in supplied_ids]
attached = geodata.attach_buildings(graph, supplied)
k = mv.transformer_count(estimates)
stations = mv.place_substations(supplied, estimates, k, attached, seed=cfg.seed)
ring = mv.build_ring(stations, attached.substation_node, attached)
print(f"{k} transformer(s) at {[s.graph_node for s in stations]}; ring length {ring.length:.0f} m")

# 400 V stage: shrink the uniform cable capacity until the layout turns infeasible
catalog = lv.read_catalog()
inst = lv.build_instance(attached, estimates, stations)
cap0 = math.floor(lv.max_cable_kw(catalog))
sol = lv.ip_cce(inst, cap0)
print(f"capacity schedule from {cap0} kW: {[cap for cap, _, _ in sol.history]}")
print(f"kept {sol.capacity} kW after {sol.iterations} MILP solves ({sol.milp_seconds:.2f} s)")
cables = lv.assign_cables(sol, catalog)
used = sorted({c.cable.name for c in cables})
print(f"{len(cables)} cable segments using {used}")

# the same variant end to end, including the load flow and the export
with tempfile.TemporaryDirectory() as tmp:
    result = pipeline.run_variant(cfg, ("O3D", "T_C"), tmp)
    lo, hi = result.report.voltage_range
    print(f"voltages between {lo:.4f} and {hi:.4f} pu, {result.report.out_of_band} bus(es) out of band")
    for t in result.report.transformers:
        print(f"  {t.transformer}: {t.node_count} nodes, eccentricity {t.eccentricity_m:.0f} m")
