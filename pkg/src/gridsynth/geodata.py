"""Street graph and building ingestion from Overpass-style OSM JSON.

Distances are great-circle (haversine) lengths on a spherical earth.  Local
geometry (polygon areas, point-to-segment projection) uses an equirectangular
tangent plane centred on the feature, which is accurate to well below a
millimetre at the sub-kilometre scale of a residential district.
"""
from __future__ import annotations

import csv
import heapq
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable

import networkx as nx
import numpy as np
from shapely.geometry import Polygon

from .errors import AttachmentError, EmptyInputError, NoPathError, OverpassParseError

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_008.8

#: highway values that become flagged footpath edges
FOOTPATH_HIGHWAYS = frozenset({"footway", "path", "pedestrian", "steps", "cycleway", "bridleway"})
#: highway values that never carry cables
IGNORED_HIGHWAYS = frozenset({"proposed", "construction", "abandoned", "razed", "platform", "bus_stop"})

NONRESIDENTIAL_BUILDINGS = frozenset({
    "garage", "garages", "carport", "shed", "hut", "roof", "industrial", "warehouse",
    "commercial", "office", "retail", "supermarket", "church", "chapel", "cathedral",
    "mosque", "temple", "synagogue", "public", "civic", "government", "hospital",
    "university", "college", "train_station", "transportation", "parking",
    "transformer_tower", "service", "greenhouse", "barn", "farm_auxiliary", "stable",
    "sports_hall", "stadium", "toilets", "kiosk", "fire_station", "bunker", "ruins",
})
AMENITY_CLASSES = {
    "school": "school",
    "kindergarten": "kindergarten",
    "community_centre": "community",
}
BUILDING_CLASSES = ("residential", "school", "kindergarten", "community", "other-nonresidential")

# Split positions are kept at least this far from existing nodes so that no
# zero-length edge is ever created.
SPLIT_EPSILON_M = 0.05
MIN_SERVICE_LENGTH_M = 0.01


class DisconnectedStreetsWarning(UserWarning):
    """Street ways outside the main connected component were dropped."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates out of range: lat={self.lat}, lon={self.lon}")


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dp = p2 - p1
    dl = math.radians(b.lon - a.lon)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def polyline_length(points: Iterable[GeoPoint]) -> float:
    pts = list(points)
    return sum(haversine(p, q) for p, q in zip(pts, pts[1:]))


def to_local_xy(points, origin: GeoPoint) -> np.ndarray:
    """Project points to an equirectangular plane (meters) centred on ``origin``."""
    lat = np.array([p.lat for p in points], dtype=float)
    lon = np.array([p.lon for p in points], dtype=float)
    k = math.radians(1.0) * EARTH_RADIUS_M
    x = (lon - origin.lon) * k * math.cos(math.radians(origin.lat))
    y = (lat - origin.lat) * k
    return np.column_stack([x, y])


def from_local_xy(x: float, y: float, origin: GeoPoint) -> GeoPoint:
    k = math.radians(1.0) * EARTH_RADIUS_M
    return GeoPoint(origin.lat + y / k, origin.lon + x / (k * math.cos(math.radians(origin.lat))))


def offset_point(origin: GeoPoint, east_m: float, north_m: float) -> GeoPoint:
    """Point displaced by the given metric offsets (tangent plane)."""
    return from_local_xy(east_m, north_m, origin)


def _open_ring(points):
    pts = list(points)
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    return pts


def _mean_point(points) -> GeoPoint:
    return GeoPoint(sum(p.lat for p in points) / len(points), sum(p.lon for p in points) / len(points))


def polygon_area(points) -> float:
    """Shoelace area in m² of a (closed or open) lat/lon ring."""
    pts = _open_ring(points)
    xy = to_local_xy(pts, _mean_point(pts))
    x, y = xy[:, 0], xy[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2.0


def polygon_centroid(points) -> GeoPoint:
    """Area centroid of a lat/lon ring."""
    pts = _open_ring(points)
    origin = _mean_point(pts)
    xy = to_local_xy(pts, origin)
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if abs(a) < 1e-12:
        return origin
    cx = ((x + xn) * cross).sum() / (6 * a)
    cy = ((y + yn) * cross).sum() / (6 * a)
    return from_local_xy(cx, cy, origin)


@dataclass
class Building:
    id: str
    footprint: list[GeoPoint]
    area_m2: float = 0.0
    height_m: float | None = None
    levels: int | None = None
    meters_count: int | None = None
    klass: str = "residential"
    connection_node: str | None = None
    tags: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.area_m2:
            self.area_m2 = polygon_area(self.footprint)
        if self.klass not in BUILDING_CLASSES:
            raise ValueError(f"unknown building class {self.klass!r}")

    @property
    def centroid(self) -> GeoPoint:
        return polygon_centroid(self.footprint)

    @property
    def node(self) -> str:
        """Graph node id of the building itself (its house busbar)."""
        return f"b:{self.id}"


class StreetGraph:
    """Undirected, length-weighted street graph.

    Node ids are strings.  Node attributes: ``point`` (GeoPoint) and ``kind``
    (``street``, ``connection``, ``building``, ``station``).  Edge attributes:
    ``length`` (m), ``kind`` (``road`` or ``service``), ``footpath`` (bool) and
    ``way`` (OSM way id or None).
    """

    def __init__(self):
        self.g = nx.Graph()
        self.substation_node: str | None = None
        self.ways: list[str] = []
        self.dropped_ways: list[str] = []

    def copy(self) -> "StreetGraph":
        other = StreetGraph()
        other.g = self.g.copy()
        other.substation_node = self.substation_node
        other.ways = list(self.ways)
        other.dropped_ways = list(self.dropped_ways)
        return other

    @property
    def nodes(self) -> dict[str, GeoPoint]:
        return {n: d["point"] for n, d in self.g.nodes(data=True)}

    def point(self, node: str) -> GeoPoint:
        return self.g.nodes[node]["point"]

    def kind(self, node: str) -> str:
        return self.g.nodes[node]["kind"]

    def add_node(self, node: str, point: GeoPoint, kind: str = "street"):
        self.g.add_node(node, point=point, kind=kind)

    def add_edge(self, a: str, b: str, length: float, kind: str = "road", footpath: bool = False, way=None):
        if not length > 0:
            raise ValueError(f"edge {a}-{b} has non-positive length {length}")
        self.g.add_edge(a, b, length=float(length), kind=kind, footpath=footpath, way=way)

    def length(self, a: str, b: str) -> float:
        return self.g.edges[a, b]["length"]

    def edges(self, kind: str | None = None):
        for a, b, d in self.g.edges(data=True):
            if kind is None or d["kind"] == kind:
                yield a, b, d

    def road_nodes(self) -> list[str]:
        return [n for n, d in self.g.nodes(data=True) if d["kind"] != "building"]

    def total_length(self, kind: str | None = "road") -> float:
        return sum(d["length"] for _, _, d in self.edges(kind))

    def __contains__(self, node):
        return node in self.g

    def __len__(self):
        return self.g.number_of_nodes()


# ---------------------------------------------------------------------------
# Overpass parsing


def _decode(document) -> tuple[dict, str | None]:
    if isinstance(document, dict):
        return document, None
    raw = document if isinstance(document, bytes) else document.encode("utf-8")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise OverpassParseError("document is not valid UTF-8", exc.start) from exc
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise OverpassParseError(f"malformed JSON: {exc.msg}", offset) from exc


def _parse_float(value):
    if value is None:
        return None
    try:
        v = float(str(value).strip().lower().removesuffix("m").strip().replace(",", "."))
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def classify_building(tags: dict) -> str:
    amenity = tags.get("amenity")
    if amenity in AMENITY_CLASSES:
        return AMENITY_CLASSES[amenity]
    building = tags.get("building", "yes")
    if building in AMENITY_CLASSES:
        return AMENITY_CLASSES[building]
    if amenity is not None or building in NONRESIDENTIAL_BUILDINGS:
        return "other-nonresidential"
    # shops inside residential buildings count as residential units
    return "residential"


def _way_points(way, node_points):
    if "geometry" in way:
        return [GeoPoint(g["lat"], g["lon"]) for g in way["geometry"]], [None] * len(way["geometry"])
    refs = way.get("nodes", [])
    missing = [r for r in refs if r not in node_points]
    if missing:
        raise OverpassParseError(f"way {way.get('id')} references unknown nodes {missing[:5]}")
    return [node_points[r] for r in refs], list(refs)


def parse_overpass(document) -> tuple[StreetGraph, list[Building]]:
    """Build the street graph and building list from an Overpass JSON document.

    ``document`` may be a ``str``/``bytes`` JSON text or an already decoded dict.
    Ways tagged ``highway`` become streets (one edge per consecutive node
    pair); ways tagged ``building`` become footprints.  Components not
    connected to the largest street component are dropped with a
    :class:`DisconnectedStreetsWarning`.  An element tagged
    ``power=substation`` marks the HV/MV feed point.
    """
    data, _ = _decode(document)
    elements = data.get("elements") if isinstance(data, dict) else None
    if not isinstance(elements, list):
        raise OverpassParseError("document has no 'elements' array")

    node_points = {}
    for el in elements:
        if el.get("type") == "node":
            try:
                node_points[el["id"]] = GeoPoint(float(el["lat"]), float(el["lon"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise OverpassParseError(f"invalid node element {el.get('id')}: {exc}") from exc

    graph = StreetGraph()
    buildings: list[Building] = []
    hv_points: list[GeoPoint] = []
    way_edges: dict[str, list[tuple[str, str]]] = {}

    for el in elements:
        tags = el.get("tags") or {}
        if tags.get("power") == "substation":
            if el.get("type") == "node" and el.get("id") in node_points:
                hv_points.append(node_points[el["id"]])
            elif el.get("type") == "way":
                pts, _ = _way_points(el, node_points)
                hv_points.append(polygon_centroid(pts) if len(pts) > 2 else pts[0])
        if el.get("type") != "way":
            continue
        wid = str(el["id"])
        if "highway" in tags and tags["highway"] not in IGNORED_HIGHWAYS:
            pts, refs = _way_points(el, node_points)
            if len(pts) < 2:
                continue
            footpath = tags["highway"] in FOOTPATH_HIGHWAYS
            ids = [str(r) if r is not None else f"w{wid}_{i}" for i, r in enumerate(refs)]
            edges = []
            for (a, pa), (b, pb) in zip(zip(ids, pts), zip(ids[1:], pts[1:])):
                for n, p in ((a, pa), (b, pb)):
                    if n not in graph:
                        graph.add_node(n, p)
                length = haversine(pa, pb)
                if a == b or length <= 0:
                    continue
                graph.add_edge(a, b, length, footpath=footpath, way=wid)
                edges.append((a, b))
            if edges:
                graph.ways.append(wid)
                way_edges[wid] = edges
        elif "building" in tags:
            pts, _ = _way_points(el, node_points)
            ring = _open_ring(pts)
            if len(pts) < 4 or pts[0] != pts[-1] or len(ring) < 3:
                warnings.warn(f"building {wid}: footprint not closed, skipped", stacklevel=2)
                continue
            poly = Polygon(to_local_xy(ring, ring[0]))
            if not poly.is_valid or poly.area <= 0:
                warnings.warn(f"building {wid}: footprint self-intersecting or empty, skipped", stacklevel=2)
                continue
            height = _parse_float(tags.get("height"))
            levels = _parse_float(tags.get("building:levels"))
            buildings.append(Building(
                id=wid,
                footprint=pts,
                height_m=height if height and height > 0 else None,
                levels=int(levels) if levels and levels >= 1 else None,
                klass=classify_building(tags),
                tags=dict(tags),
            ))

    if graph.g.number_of_edges() == 0:
        raise EmptyInputError("document contains no street ways")
    if not buildings:
        raise EmptyInputError("document contains no building footprints")

    _drop_disconnected(graph, way_edges)
    if hv_points:
        graph.substation_node = nearest_node(graph, hv_points[0])
    return graph, buildings


def _drop_disconnected(graph: StreetGraph, way_edges):
    components = list(nx.connected_components(graph.g))
    if len(components) <= 1:
        return
    # largest by node count; ties broken by the smallest node id
    main = min(components, key=lambda c: (-len(c), min(c)))
    dropped_nodes = set().union(*(c for c in components if c is not main))
    dropped = [w for w, edges in way_edges.items() if all(a in dropped_nodes for a, _ in edges)]
    graph.g.remove_nodes_from(sorted(dropped_nodes))
    graph.ways = [w for w in graph.ways if w not in dropped]
    graph.dropped_ways = dropped
    msg = f"dropped {len(components) - 1} disconnected street component(s); ways {', '.join(dropped)}"
    logger.warning(msg)
    warnings.warn(msg, DisconnectedStreetsWarning, stacklevel=3)


def read_overpass(path) -> tuple[StreetGraph, list[Building]]:
    with open(path, "rb") as fh:
        return parse_overpass(fh.read())


def nearest_node(graph: StreetGraph, point: GeoPoint, candidates=None, exclude=()) -> str:
    """Closest graph node to ``point`` (ties broken by node order)."""
    nodes = [n for n in (candidates if candidates is not None else graph.road_nodes()) if n not in exclude]
    if not nodes:
        raise AttachmentError("no candidate nodes to snap to")
    xy = to_local_xy([graph.point(n) for n in nodes], point)
    return nodes[int(np.argmin(np.hypot(xy[:, 0], xy[:, 1])))]


# ---------------------------------------------------------------------------
# Attribute tables


def _read_table(path, value_col, cast):
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames or value_col not in reader.fieldnames:
            raise ValueError(f"{path}: header must contain 'id,{value_col}'")
        for row in reader:
            out[row["id"].strip()] = cast(row[value_col])
    return out


def read_height_table(path) -> dict[str, float]:
    return _read_table(path, "height_m", float)


def read_meter_table(path) -> dict[str, int]:
    return _read_table(path, "meter_count", lambda v: int(float(v)))


def _apply(buildings, table, attr, valid, rejected):
    out = []
    for b in buildings:
        if b.id in table:
            value = table[b.id]
            if valid(value):
                b = replace(b, **{attr: value})
            else:
                logger.warning("rejected %s=%r for building %s", attr, value, b.id)
                if rejected is not None:
                    rejected.append((b.id, f"invalid {attr} {value!r}"))
        out.append(b)
    return out


def load_heights(buildings, table, rejected=None) -> list[Building]:
    """Return buildings with ``height_m`` set from ``table``.

    Non-positive heights are skipped; if ``rejected`` is a list, one
    ``(building_id, reason)`` tuple is appended per skipped record.
    """
    return _apply(buildings, table, "height_m", lambda v: v is not None and v > 0, rejected)


def load_meters(buildings, table, rejected=None) -> list[Building]:
    """Like :func:`load_heights` for electricity-meter counts (must be >= 1)."""
    return _apply(buildings, table, "meters_count", lambda v: v is not None and int(v) == v and v >= 1, rejected)


# ---------------------------------------------------------------------------
# Attachment


def _project(graph: StreetGraph, point: GeoPoint, exclude_footpaths: bool):
    edges = [(a, b, d) for a, b, d in graph.edges("road") if not (exclude_footpaths and d["footpath"])]
    if not edges:
        raise AttachmentError("graph has no road edges to attach to")
    pa = to_local_xy([graph.point(a) for a, _, _ in edges], point)
    pb = to_local_xy([graph.point(b) for _, b, _ in edges], point)
    seg = pb - pa
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    t = np.clip(-np.einsum("ij,ij->i", pa, seg) / np.where(seg_len2 > 0, seg_len2, 1.0), 0.0, 1.0)
    foot = pa + t[:, None] * seg
    dist = np.hypot(foot[:, 0], foot[:, 1])
    i = int(np.argmin(dist))
    return edges[i], float(t[i]), float(dist[i])


def split_edge(graph: StreetGraph, a: str, b: str, t: float, new_node: str, kind: str) -> str:
    """Insert ``new_node`` on edge a-b at fraction ``t`` from ``a``.

    The two halves get lengths ``t*L`` and ``(1-t)*L`` so total road length is
    conserved exactly.  ``t`` is clamped so that neither half is shorter than
    :data:`SPLIT_EPSILON_M` (or a third of the edge, if shorter).
    """
    data = graph.g.edges[a, b]
    length = data["length"]
    eps = min(SPLIT_EPSILON_M, length / 3.0) / length
    t = min(max(t, eps), 1.0 - eps)
    pa, pb = graph.point(a), graph.point(b)
    foot = GeoPoint(pa.lat + t * (pb.lat - pa.lat), pa.lon + t * (pb.lon - pa.lon))
    graph.g.remove_edge(a, b)
    graph.add_node(new_node, foot, kind=kind)
    graph.add_edge(a, new_node, t * length, footpath=data["footpath"], way=data["way"])
    graph.add_edge(new_node, b, (1.0 - t) * length, footpath=data["footpath"], way=data["way"])
    return new_node


def attach_point(graph: StreetGraph, point: GeoPoint, new_node: str, kind: str,
                 exclude_footpaths: bool = False) -> float:
    """Split the nearest road edge at the orthogonal foot point of ``point``.

    Returns the perpendicular distance in meters.  Mutates ``graph``.
    """
    (a, b, _), t, dist = _project(graph, point, exclude_footpaths)
    if a > b:
        a, b, t = b, a, 1.0 - t
    split_edge(graph, a, b, t, new_node, kind)
    return dist


def attach_buildings(graph: StreetGraph, buildings, max_service_length: float = 100.0,
                     exclude_footpaths: bool = False) -> StreetGraph:
    """Return a copy of ``graph`` with every building attached.

    Each building contributes a connection node on its nearest road edge and
    a building node at its footprint centroid, joined by a ``service`` edge.
    ``building.connection_node`` is set in place.
    """
    out = graph.copy()
    too_far = []
    for bld in buildings:
        c = bld.centroid
        (_, _, _), _, dist = _project(out, c, exclude_footpaths)
        if dist > max_service_length:
            too_far.append(bld.id)
            continue
        conn = f"c:{bld.id}"
        attach_point(out, c, conn, "connection", exclude_footpaths)
        out.add_node(bld.node, c, kind="building")
        service = max(haversine(c, out.point(conn)), MIN_SERVICE_LENGTH_M)
        out.add_edge(conn, bld.node, service, kind="service")
        bld.connection_node = conn
    if too_far:
        raise AttachmentError(
            f"{len(too_far)} building(s) farther than {max_service_length} m from any road: {', '.join(too_far)}",
            too_far,
        )
    return out


# ---------------------------------------------------------------------------
# Shortest paths


def shortest_paths_from(graph: StreetGraph, source: str, targets=None) -> dict[str, tuple[float, list[str]]]:
    """Dijkstra from ``source``; among equal-length paths the lexicographically
    smallest node sequence wins.  Stops early once all ``targets`` are settled."""
    if source not in graph:
        raise NoPathError(f"node {source!r} not in graph")
    remaining = set(targets) if targets is not None else None
    adj = graph.g.adj
    done: dict[str, tuple[float, list[str]]] = {}
    heap = [(0.0, (source,))]
    while heap:
        d, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done[node] = (d, list(path))
        if remaining is not None:
            remaining.discard(node)
            if not remaining:
                break
        for nbr, attrs in adj[node].items():
            if nbr not in done:
                heapq.heappush(heap, (d + attrs["length"], path + (nbr,)))
    return done


def shortest_path(graph: StreetGraph, a: str, b: str) -> tuple[float, list[str]]:
    if b not in graph:
        raise NoPathError(f"node {b!r} not in graph")
    found = shortest_paths_from(graph, a, [b])
    if b not in found:
        raise NoPathError(f"no path between {a!r} and {b!r}")
    return found[b]
