"""End-to-end grid synthesis: ingest, estimate, MV stage, LV stage, evaluate, export."""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from importlib import metadata
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import geodata, loads, lv, metrics, mv
from .errors import CableSizingError, ConfigError, GridSynthError, ModelIntegrityError
from .geodata import GeoPoint, haversine
from .model import GridModel, Segment
from .powerflow import solve_radial

logger = logging.getLogger(__name__)

DATA_SOURCES = ("O2D", "O3D", "EM")
TRANSFORMER_MODES = ("T_K", "T_C")
PALETTE = ("#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4",
           "#f032e6", "#9a6324", "#469990", "#808000", "#000075", "#e6beff")


class StageError(GridSynthError):
    """Wraps the error of a pipeline stage and names the stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")

    def to_dict(self) -> dict:
        return {"error": {"stage": self.stage, "type": type(self.cause).__name__, "message": str(self.cause)}}


@dataclass
class RunConfig:
    overpass: Path
    heights: Path | None = None
    meters: Path | None = None
    known_stations: Path | None = None
    h0_profile: Path | None = None
    cable_catalog: Path | None = None
    data_sources: tuple = ("O3D",)
    transformer_modes: tuple = ("T_C",)
    params: dict = field(default_factory=dict)
    transformer: dict = field(default_factory=dict)
    seed: int = 7
    kmeans_restarts: int = 10
    cap0: int | None = None
    n: int = 4
    cce: str = "ip"
    exclude_footpaths: bool = False
    max_service_length: float = 100.0
    milp_time_limit: float = 300.0
    hv_location: tuple | None = None
    bin_width: float = 1.0
    normalized_similarity: bool = False
    quasi_dynamic_steps: int = 0
    year: int = 2023
    debug_graph: bool = False
    out: Path = Path("out")
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def variants(self) -> list[tuple[str, str]]:
        return list(itertools.product(self.data_sources, self.transformer_modes))

    @property
    def config_hash(self) -> str:
        """Digest of the configuration; the output directory is not part of it."""
        raw = {k: ({n: v for n, v in sec.items() if n != "out"} if k == "run" and isinstance(sec, dict) else sec)
               for k, sec in self.raw.items()}
        return hashlib.sha256(json.dumps(raw, sort_keys=True, default=str).encode()).hexdigest()[:16]

    def validate(self):
        for d, t in self.variants:
            if d not in DATA_SOURCES or t not in TRANSFORMER_MODES:
                raise ConfigError(f"unknown variant ({d}, {t})")
        need = [("overpass", self.overpass)]
        if "EM" in self.data_sources:
            if self.meters is None:
                raise ConfigError("variant EM requires a meters CSV (input.meters)")
            need.append(("meters", self.meters))
        if "O3D" in self.data_sources and self.heights is None and not _has_height_tags(self.overpass):
            raise ConfigError("variant O3D requires a heights CSV (input.heights) or height tags")
        if "T_K" in self.transformer_modes:
            if self.known_stations is None:
                raise ConfigError("transformer mode T_K requires a known-stations CSV (input.known_stations)")
            need.append(("known_stations", self.known_stations))
        for key in ("heights", "h0_profile", "cable_catalog"):
            if getattr(self, key) is not None:
                need.append((key, getattr(self, key)))
        for key, path in need:
            if not Path(path).is_file():
                raise ConfigError(f"input.{key}: file not found: {path}")
        if self.cce not in ("ip", "nb"):
            raise ConfigError("lv.cce must be 'ip' or 'nb'")
        if self.cap0 is not None and self.cap0 < 1:
            raise ConfigError("lv.cap0 must be >= 1")


def _has_height_tags(path) -> bool:
    try:
        data = json.loads(Path(path).read_bytes())
    except (OSError, ValueError):
        return False
    return any("height" in (e.get("tags") or {}) for e in data.get("elements", []) if e.get("type") == "way")


def _as_tuple(v):
    return tuple(v) if isinstance(v, (list, tuple)) else (v,)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read a TOML run configuration; ``overrides`` uses dotted keys (``lv.cap0``)."""
    raw: dict = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        base = path.parent
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        raw.setdefault(section, {})[name] = value
    inp, var, run = raw.get("input", {}), raw.get("variant", {}), raw.get("run", {})
    lvc, ev = raw.get("lv", {}), raw.get("evaluation", {})

    def p(key):
        v = inp.get(key)
        return (base / v) if v else None

    if p("overpass") is None:
        raise ConfigError("input.overpass is required")
    # run.out is relative to the config file; without it outputs go to ./out
    out = Path(run["out"]) if "out" in run else Path.cwd() / "out"
    cfg = RunConfig(
        overpass=p("overpass"), heights=p("heights"), meters=p("meters"), known_stations=p("known_stations"),
        h0_profile=p("h0_profile"), cable_catalog=p("cable_catalog"),
        data_sources=_as_tuple(var.get("data", "O3D")), transformer_modes=_as_tuple(var.get("transformers", "T_C")),
        params=raw.get("params", {}), transformer=raw.get("transformer", {}),
        seed=int(run.get("seed", 7)), kmeans_restarts=int(run.get("kmeans_restarts", 10)),
        cap0=lvc.get("cap0"), n=int(lvc.get("n", 4)), cce=lvc.get("cce", "ip"),
        exclude_footpaths=bool(lvc.get("exclude_footpaths", False)),
        max_service_length=float(lvc.get("max_service_length", 100.0)),
        milp_time_limit=float(lvc.get("time_limit", 300.0)),
        hv_location=tuple(run["hv_location"]) if "hv_location" in run else None,
        bin_width=float(ev.get("bin_width", 1.0)), normalized_similarity=bool(ev.get("normalized", False)),
        quasi_dynamic_steps=int(ev.get("quasi_dynamic_steps", 0)), year=int(ev.get("year", 2023)),
        debug_graph=bool(run.get("debug_graph", False)),
        out=out if out.is_absolute() else base / out,
        raw=raw,
    )
    unknown = set(cfg.params) - {f.name for f in fields(loads.EstimationParams)}
    if unknown:
        raise ConfigError(f"unknown estimation parameter(s): {sorted(unknown)}")
    return cfg


# ---------------------------------------------------------------------------
# result containers


@dataclass
class EvaluationReport:
    transformers: list[metrics.TransformerStats]
    histogram: metrics.LoadingHistogram
    voltage_range: tuple[float, float]
    out_of_band: int
    lv_capacity: dict
    voltages: list = field(default_factory=list)  # (subgrid, timestamp, bus, v_pu)
    loadings: list = field(default_factory=list)  # (subgrid, timestamp, branch, loading_pct)
    timer: metrics.StageTimer | None = None

    def to_dict(self) -> dict:
        return {
            "transformers": [{"id": t.transformer, "node_count": t.node_count, "eccentricity_m": t.eccentricity_m}
                             for t in self.transformers],
            "voltage_range_pu": list(self.voltage_range),
            "out_of_band_buses": self.out_of_band,
            "lv_capacity": self.lv_capacity,
            "loading_histogram": {"bin_width": self.histogram.bin_width,
                                  "counts": self.histogram.counts.tolist()},
        }


@dataclass
class RunResult:
    model: GridModel
    report: EvaluationReport
    out_dir: Path


# ---------------------------------------------------------------------------
# stages


class _Stages:
    def __init__(self, timer):
        self.timer = timer

    def run(self, name, timer_stage, fn, *args, **kwargs):
        try:
            with self.timer.stage(timer_stage):
                return fn(*args, **kwargs)
        except StageError:
            raise
        except (GridSynthError, ValueError, OSError, KeyError) as exc:
            raise StageError(name, exc) from exc


def _ingest(cfg: RunConfig):
    graph, buildings = geodata.read_overpass(cfg.overpass)
    rejected: list = []
    if cfg.heights is not None:
        buildings = geodata.load_heights(buildings, geodata.read_height_table(cfg.heights), rejected)
    if cfg.meters is not None:
        buildings = geodata.load_meters(buildings, geodata.read_meter_table(cfg.meters), rejected)
    return graph, buildings, rejected


def _hv_node(cfg: RunConfig, graph, buildings) -> str:
    if graph.substation_node is not None:
        return graph.substation_node
    streets = [n for n, d in graph.g.nodes(data=True) if d["kind"] == "street"]
    if cfg.hv_location is not None:
        return geodata.nearest_node(graph, GeoPoint(*cfg.hv_location), streets)
    pts = [b.centroid for b in buildings]
    # no feed point given: use the street node closest to the south-west corner of the area
    corner = GeoPoint(min(p.lat for p in pts), min(p.lon for p in pts))
    logger.warning("no HV/MV substation found; using the street node nearest to %s", corner)
    return geodata.nearest_node(graph, corner, streets)


def _stage_estimate(cfg, data_source, buildings):
    params = loads.EstimationParams(**cfg.params)
    report: dict = {}
    estimates = loads.estimate_all(params, buildings, data_source, report)
    return params, estimates, report


def _stage_mv(cfg, transformer_mode, graph, buildings, estimates, tparams):
    hv = _hv_node(cfg, graph, buildings)
    graph.substation_node = hv
    if transformer_mode == "T_K":
        stations = mv.attach_stations(graph, mv.read_known_stations(cfg.known_stations), cfg.exclude_footpaths)
    else:
        k = mv.transformer_count(estimates, tparams)
        weighted = sum(1 for e in estimates if e.units > 0)
        if k > weighted:
            logger.warning("transformer count %d capped at %d weighted buildings", k, weighted)
            k = weighted
        stations = mv.place_substations(buildings, estimates, k, graph, cfg.seed, cfg.kmeans_restarts)
    ring = mv.build_ring(stations, hv, graph)
    return hv, stations, ring


def _stage_lv(cfg, graph, estimates, stations, catalog, power_factor):
    inst = lv.build_instance(graph, estimates, stations, cfg.exclude_footpaths)
    cap0 = cfg.cap0 if cfg.cap0 is not None else int(math.floor(lv.max_cable_kw(catalog, power_factor)))
    if cfg.cce == "ip":
        sol = lv.ip_cce(inst, cap0, cfg.n, cfg.milp_time_limit)
    else:
        sol = lv.nb_cce(inst, cap0, 1, cfg.milp_time_limit)
    segments = lv.assign_cables(sol, catalog, power_factor)
    return inst, sol, segments, cap0


def _assemble(cfg, variant, graph, buildings, estimates, hv, stations, ring, sol, lv_segments, catalog,
              power_factor, cap0, provenance) -> GridModel:
    by_node = {s.graph_node: s.id for s in stations}
    owner = {}
    segs = []
    for s_node, edges in sorted(sol.trees.items()):
        tid = by_node[s_node]
        for e in edges:
            owner[e[1]] = tid
    for seg in lv_segments:
        segs.append(Segment(owner[seg.b], seg.a, seg.b, seg.length_m, seg.flow_kw, seg.cable.name, "road"))
    est = {e.building_id: e for e in estimates}
    supplied = [b for b in buildings if b.id in est]
    for b in supplied:
        conn = b.connection_node
        if conn not in owner:
            raise ModelIntegrityError(f"building {b.id} is not connected to any LV tree")
        e = est[b.id]
        cable = lv.size_cable(e.peak_kw, catalog, power_factor=power_factor)
        if cable is None:
            raise CableSizingError(f"service cable for building {b.id} exceeds the largest cable")
        segs.append(Segment(owner[conn], conn, b.node, graph.length(conn, b.node), e.peak_kw, cable.name, "service"))
    segs.sort(key=lambda s: (s.transformer, s.a, s.b))

    used = {hv} | {s.graph_node for s in stations} | {n for s in segs for n in (s.a, s.b)}
    used |= {n for p in ring.hop_paths for n in p}
    nodes = {}
    for n in graph.g.nodes:
        if n in used:
            pt = graph.point(n)
            nodes[n] = {"lat": pt.lat, "lon": pt.lon, "kind": graph.kind(n)}
    ring_d = {"sequence": ring.sequence, "nodes": ring.nodes, "hop_lengths_m": ring.hop_lengths,
              "hop_paths": ring.hop_paths, "length_m": ring.length}
    bl = [{"id": b.id, "klass": b.klass, "area_m2": b.area_m2, "height_m": b.height_m,
           "meters_count": b.meters_count, "connection_node": b.connection_node,
           "E_kwh": est[b.id].energy_kwh, "nU": est[b.id].units, "P_peak_kw": est[b.id].peak_kw}
          for b in supplied]
    cables = {c.name: c for c in catalog}
    return GridModel(
        variant={"data": variant[0], "transformers": variant[1]},
        hv_node=hv, substations=list(stations), ring=ring_d, nodes=nodes, segments=segs, buildings=bl,
        cables=cables, power_factor=power_factor, provenance=provenance,
        lv_capacity={"method": cfg.cce, "cap0_kw": cap0, "capacity_kw": sol.capacity,
                     "iterations": sol.iterations, "objective_m": sol.objective,
                     "schedule": [[c, f] for c, f, _ in sol.history]},
    )


def evaluate(model: GridModel, bin_width: float = 1.0, quasi_dynamic: tuple | None = None) -> EvaluationReport:
    """Topology metrics plus a peak-load flow per subgrid.

    ``quasi_dynamic`` may be ``(profile, year, steps)``; then each subgrid is
    additionally solved for the first ``steps`` quarter hours of ``year``.
    """
    stats = metrics.transformer_stats(model)
    results, voltages, loadings = [], [], []
    for s in model.substations:
        if not model.tree(s.id):
            continue
        net = model.radial_network(s.id)
        res = solve_radial(net)
        results.append(res)
        voltages += [(s.id, "peak", b, v) for b, v in res.voltages_pu.items()]
        loadings += [(s.id, "peak", br, x) for br, x in res.loading_pct.items()]
        if quasi_dynamic:
            profile, year, steps = quasi_dynamic
            frac = profile.energy_fractions(year)[:steps] * 4.0
            stamps = loads.series_timestamps(year)[:steps]
            series = {f"b:{b['id']}": frac * b["E_kwh"] for b in model.buildings if f"b:{b['id']}" in net.buses}
            from .powerflow import quasi_dynamic as qd
            q = qd(net, series, stamps)
            for ts, r in zip(stamps, q.results):
                t = ts.isoformat(timespec="minutes")
                voltages += [(s.id, t, b, v) for b, v in r.voltages_pu.items()]
                loadings += [(s.id, t, br, x) for br, x in r.loading_pct.items()]
    hist = metrics.loading_histogram(results, bin_width)
    vs = [v for r in results for v in r.voltages_pu.values()] or [1.0]
    oob = sum(len(r.out_of_band()) for r in results)
    return EvaluationReport(stats, hist, (min(vs), max(vs)), oob, model.lv_capacity, voltages, loadings)


def _versions() -> dict:
    out = {}
    for pkg in ("gridsynth", "numpy", "scipy", "networkx"):
        try:
            out[pkg] = metadata.version(pkg if pkg != "gridsynth" else "artifact")
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def run_variant(cfg: RunConfig, variant: tuple[str, str], out_dir: Path | None = None) -> RunResult:
    """Run the full pipeline for one ``(data source, transformer mode)`` pair."""
    timer = metrics.StageTimer()
    st = _Stages(timer)
    data_source, transformer_mode = variant
    out_dir = Path(out_dir or cfg.out)
    tparams = mv.TransformerParams(**cfg.transformer)
    catalog = st.run("ingest", "data ingestion", lv.read_catalog, cfg.cable_catalog)
    graph, buildings, rejected = st.run("ingest", "data ingestion", _ingest, cfg)
    params, estimates, est_report = st.run("estimate", "data ingestion", _stage_estimate, cfg, data_source, buildings)
    supplied_ids = {e.building_id for e in estimates}
    supplied = [b for b in buildings if b.id in supplied_ids]
    graph = st.run("attach", "data ingestion", geodata.attach_buildings, graph, supplied,
                   cfg.max_service_length, cfg.exclude_footpaths)
    if cfg.debug_graph:
        st.run("attach", "data ingestion", write_graph_geojson, graph, out_dir / "graph.geojson")
    hv, stations, ring = st.run("mv", "20 kV generation", _stage_mv, cfg, transformer_mode, graph, supplied,
                                estimates, tparams)
    inst, sol, lv_segments, cap0 = st.run("lv", "400 V generation", _stage_lv, cfg, graph, estimates, stations,
                                          catalog, tparams.power_factor)
    timer.milp_seconds = sol.milp_seconds
    provenance = {"config_hash": cfg.config_hash, "seed": cfg.seed, "versions": _versions()}
    model = st.run("lv", "400 V generation", _assemble, cfg, variant, graph, buildings, estimates, hv, stations,
                   ring, sol, lv_segments, catalog, tparams.power_factor, cap0, provenance)
    qd = None
    if cfg.quasi_dynamic_steps > 0:
        profile = loads.H0Profile.from_csv(cfg.h0_profile)
        qd = (profile, cfg.year, cfg.quasi_dynamic_steps)
    report = st.run("evaluate", "export", evaluate, model, cfg.bin_width, qd)
    report.timer = timer
    st.run("export", "export", export, model, report, estimates, buildings, out_dir,
           {"estimation": est_report, "rejected_records": rejected})
    metrics.write_runtime_csv(out_dir / "runtime.csv", metrics.runtime_report(timer))
    return RunResult(model, report, out_dir)


def run(cfg: RunConfig) -> dict[tuple[str, str], RunResult]:
    """Run every configured variant.  With more than one variant, each goes to
    ``out/<data>-<mode>/`` and a cross-variant comparison to ``out/compare``."""
    cfg.validate()
    variants = cfg.variants
    results = {}
    if len(variants) == 1:
        results[variants[0]] = run_variant(cfg, variants[0], cfg.out)
        return results
    for v in variants:
        results[v] = run_variant(cfg, v, cfg.out / f"{v[0]}-{v[1]}")
    paths = [r.out_dir / "model.json" for r in results.values()]
    try:
        compare(paths, None, cfg.out / "compare", cfg.bin_width, cfg.normalized_similarity)
    except GridSynthError as exc:
        raise StageError("compare", exc) from exc
    return results


# ---------------------------------------------------------------------------
# export


def color_for(tid: str) -> str:
    return PALETTE[int(hashlib.sha256(tid.encode()).hexdigest(), 16) % len(PALETTE)]


def write_graph_geojson(graph, path):
    """Debug dump of a (possibly attached) street graph."""
    feats = []
    for a, b, d in sorted(graph.g.edges(data=True), key=lambda e: (str(e[0]), str(e[1]))):
        pa, pb = graph.point(a), graph.point(b)
        feats.append(_feature("LineString", [[pa.lon, pa.lat], [pb.lon, pb.lat]],
                              {"from": a, "to": b, "kind": d["kind"], "length_m": d["length"],
                               "footpath": d.get("footpath", False)}))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    _write_json(path, {"type": "FeatureCollection", "features": feats})


def _feature(geom_type, coords, props):
    return {"type": "Feature", "geometry": {"type": geom_type, "coordinates": coords}, "properties": props}


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def export(model: GridModel, report: EvaluationReport, estimates, buildings, out_dir, extra=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config_hash": model.provenance.get("config_hash"), "variant": model.variant,
            "schema_version": model.schema_version}
    (out / "model.json").write_text(model.dumps(), encoding="utf-8")
    loads.write_estimates_csv(out / "estimates.csv", estimates)

    pt = lambda n: [model.nodes[n]["lon"], model.nodes[n]["lat"]]  # noqa: E731
    owner = model.supplied_by()
    est = {b["id"]: b for b in model.buildings}
    bfeat = []
    for b in buildings:
        tid = owner.get(f"b:{b.id}")
        ring = [[p.lon, p.lat] for p in b.footprint]
        props = {"id": b.id, "klass": b.klass, "transformer": tid, "color": color_for(tid) if tid else None}
        if b.id in est:
            props.update(E_kwh=est[b.id]["E_kwh"], nU=est[b.id]["nU"], P_peak_kw=est[b.id]["P_peak_kw"])
        bfeat.append(_feature("Polygon", [ring], props))
    _write_json(out / "buildings.geojson", {"type": "FeatureCollection", "gridsynth": meta, "features": bfeat})

    rfeat = [_feature("LineString", [pt(n) for n in path],
                      {"hop": i, "from": model.ring["sequence"][i], "to": model.ring["sequence"][i + 1],
                       "length_m": model.ring["hop_lengths_m"][i]})
             for i, path in enumerate(model.ring["hop_paths"]) if len(path) > 1]
    rfeat += [_feature("Point", [s.location.lon, s.location.lat],
                       {"station": s.id, "source": s.source, "color": color_for(s.id)}) for s in model.substations]
    _write_json(out / "ring.geojson", {"type": "FeatureCollection", "gridsynth": meta, "features": rfeat})

    lfeat = [_feature("LineString", [pt(s.a), pt(s.b)],
                      {"transformer": s.transformer, "color": color_for(s.transformer), "from": s.a, "to": s.b,
                       "kind": s.kind, "cable": s.cable, "length_m": s.length_m, "flow_kw": s.flow_kw})
             for s in model.segments]
    _write_json(out / "lv.geojson", {"type": "FeatureCollection", "gridsynth": meta, "features": lfeat})

    _write_rows(out / "transformers.csv", ["transformer", "node_count", "eccentricity_m"],
                [(t.transformer, t.node_count, repr(t.eccentricity_m)) for t in report.transformers])
    h = report.histogram
    _write_rows(out / "loading_histogram.csv", ["bin_lower_pct", "count"],
                [(repr(float(lo)), int(c)) for lo, c in zip(h.lower_edges, h.counts)])
    _write_rows(out / "voltages.csv", ["subgrid", "timestamp", "bus", "v_pu"],
                [(a, t, b, repr(v)) for a, t, b, v in report.voltages])
    _write_rows(out / "loadings.csv", ["subgrid", "timestamp", "branch", "loading_pct"],
                [(a, t, b, repr(v)) for a, t, b, v in report.loadings])
    long = [("node_count", t.transformer, t.node_count) for t in report.transformers]
    long += [("eccentricity_m", t.transformer, repr(t.eccentricity_m)) for t in report.transformers]
    long += [("loading_count", repr(float(lo)), int(c)) for lo, c in zip(h.lower_edges, h.counts)]
    _write_rows(out / "metrics_long.csv", ["metric", "subject", "value"], long)
    _write_json(out / "report.json", {"gridsynth": meta, **report.to_dict(), **(extra or {})})


# ---------------------------------------------------------------------------
# comparison


def _label(model: GridModel, path) -> str:
    v = model.variant or {}
    return f"{v['data']},{v['transformers']}" if v.get("data") else Path(path).stem


def _bbox_disagreement(a, b) -> float:
    """1 - intersection-over-union of two lat/lon bounding boxes."""
    lat0, lon0 = max(a[0], b[0]), max(a[1], b[1])
    lat1, lon1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, lat1 - lat0) * max(0.0, lon1 - lon0)
    area = lambda x: (x[2] - x[0]) * (x[3] - x[1])  # noqa: E731
    union = area(a) + area(b) - inter
    return 1.0 - inter / union if union > 0 else 0.0


@dataclass
class ComparisonReport:
    labels: list[str]
    similarity: list[list[float]]
    transformers: dict[str, list[metrics.TransformerStats]]
    distances: dict[str, list[tuple[str, str, float]]]


def compare(model_paths, reference=None, out_dir=None, bin_width: float = 1.0, normalized: bool = False,
            max_bbox_disagreement: float = 0.1) -> ComparisonReport:
    """Cross-model metric tables and pairwise similarity matrix.

    The reference model (if any) comes first in the matrix.  Transformer
    distance tables are computed against the reference, or else against the
    first model with known stations.
    """
    entries = []
    if reference is not None:
        entries.append((GridModel.load(reference), reference))
    entries += [(GridModel.load(p), p) for p in model_paths]
    if len(entries) < 2:
        raise ConfigError("compare needs at least two models")
    base_box = entries[0][0].bbox()
    for m, p in entries[1:]:
        dis = _bbox_disagreement(base_box, m.bbox())
        if dis > max_bbox_disagreement:
            raise ModelIntegrityError(f"{p}: study area differs from {entries[0][1]} ({dis:.0%} bbox disagreement)")
    labels, seen = [], set()
    for m, p in entries:
        lab = _label(m, p)
        if lab in seen:
            lab = f"{lab} ({Path(p).stem})"
        seen.add(lab)
        labels.append(lab)
    evals = [evaluate(m, bin_width) for m, _ in entries]
    sim = [[metrics.similarity_index(a.histogram, b.histogram, normalized) for b in evals] for a in evals]
    stats = {lab: e.transformers for lab, e in zip(labels, evals)}
    ref_model = entries[0][0] if reference is not None else next(
        (m for m, _ in entries if any(s.source == "known" for s in m.substations)), None)
    distances = {}
    if ref_model is not None:
        for (m, _), lab in zip(entries, labels):
            if m is not ref_model:
                distances[lab] = metrics.transformer_distances(ref_model.substations, m.substations)
    rep = ComparisonReport(labels, sim, stats, distances)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "similarity.csv", ["model", *labels],
                    [(lab, *[repr(x) for x in row]) for lab, row in zip(labels, sim)])
        _write_rows(out / "transformers.csv", ["model", "transformer", "node_count", "eccentricity_m"],
                    [(lab, t.transformer, t.node_count, repr(t.eccentricity_m))
                     for lab, ts in stats.items() for t in ts])
        _write_rows(out / "transformer_distances.csv", ["model", "known", "computed", "meters"],
                    [(lab, k, c, repr(d)) for lab, rows in distances.items() for k, c, d in rows])
        hashes = sorted({m.provenance.get("config_hash") for m, _ in entries if m.provenance.get("config_hash")})
        _write_json(out / "comparison.json", {
            "gridsynth": {"config_hashes": hashes},
            "labels": labels, "similarity": sim,
            "transformers": {lab: [vars(t) for t in ts] for lab, ts in stats.items()},
            "distances": {lab: [list(r) for r in rows] for lab, rows in distances.items()},
        })
    return rep


def station_distance(a, b) -> float:
    return haversine(a.location, b.location)
