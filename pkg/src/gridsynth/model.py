"""Serializable grid model produced by a pipeline run."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .errors import ModelIntegrityError
from .geodata import GeoPoint
from .lv import Cable
from .mv import Substation
from .powerflow import Branch, RadialNetwork

SCHEMA_VERSION = 1


@dataclass
class Segment:
    transformer: str
    a: str  # upstream node
    b: str  # downstream node
    length_m: float
    flow_kw: float
    cable: str
    kind: str = "road"


@dataclass
class GridModel:
    variant: dict
    hv_node: str
    substations: list[Substation]
    ring: dict
    nodes: dict[str, dict]  # node -> {lat, lon, kind}
    segments: list[Segment]
    buildings: list[dict]
    cables: dict[str, Cable]
    lv_capacity: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    power_factor: float = 0.95
    u_kv: float = 0.4
    schema_version: int = SCHEMA_VERSION

    # -- queries -----------------------------------------------------------

    def station_node(self, tid: str) -> str:
        for s in self.substations:
            if s.id == tid:
                return s.graph_node
        raise KeyError(tid)

    def tree(self, tid: str) -> list[Segment]:
        return [s for s in self.segments if s.transformer == tid]

    def lv_nodes(self) -> list[str]:
        """Building and connection nodes (two per supplied building)."""
        return [n for n, d in self.nodes.items() if d["kind"] in ("building", "connection")]

    def supplied_by(self) -> dict[str, str]:
        """Map every LV node to the transformer id supplying it."""
        owner = {}
        for seg in self.segments:
            if seg.b in owner:
                raise ModelIntegrityError(f"node {seg.b} fed from two places")
            owner[seg.b] = seg.transformer
        return owner

    def bbox(self) -> tuple[float, float, float, float]:
        lats = [d["lat"] for d in self.nodes.values()]
        lons = [d["lon"] for d in self.nodes.values()]
        return min(lats), min(lons), max(lats), max(lons)

    def radial_network(self, tid: str, loads_kw: dict | None = None) -> RadialNetwork:
        branches = []
        for seg in self.tree(tid):
            cable = self.cables[seg.cable]
            km = seg.length_m / 1000.0
            branches.append(Branch(seg.a, seg.b, cable.r_ohm_per_km * km, cable.x_ohm_per_km * km, cable.ampacity_a))
        if loads_kw is None:
            loads_kw = {f"b:{b['id']}": b["P_peak_kw"] for b in self.buildings}
        nodes = {self.station_node(tid)} | {br.child for br in branches}
        return RadialNetwork(self.station_node(tid), branches, {k: v for k, v in loads_kw.items() if k in nodes},
                             self.power_factor, self.u_kv)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "variant": self.variant,
            "provenance": self.provenance,
            "power_factor": self.power_factor,
            "u_kv": self.u_kv,
            "hv_node": self.hv_node,
            "substations": [
                {"id": s.id, "lat": s.location.lat, "lon": s.location.lon, "node": s.graph_node, "source": s.source}
                for s in self.substations
            ],
            "ring": self.ring,
            "lv_capacity": self.lv_capacity,
            "cables": {k: {"ampacity_A": c.ampacity_a, "r_ohm_per_km": c.r_ohm_per_km,
                           "x_ohm_per_km": c.x_ohm_per_km, "u_nominal_kV": c.u_nominal_kv}
                       for k, c in sorted(self.cables.items())},
            "nodes": self.nodes,
            "segments": [asdict(s) for s in self.segments],
            "buildings": self.buildings,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "GridModel":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ModelIntegrityError(f"unsupported model schema_version {d.get('schema_version')!r}")
        return cls(
            variant=d["variant"],
            hv_node=d["hv_node"],
            substations=[Substation(s["id"], GeoPoint(s["lat"], s["lon"]), s["node"], s["source"])
                         for s in d["substations"]],
            ring=d["ring"],
            nodes=d["nodes"],
            segments=[Segment(**s) for s in d["segments"]],
            buildings=d["buildings"],
            cables={k: Cable(k, c["ampacity_A"], c["r_ohm_per_km"], c["x_ohm_per_km"], c["u_nominal_kV"])
                    for k, c in d["cables"].items()},
            lv_capacity=d.get("lv_capacity", {}),
            provenance=d.get("provenance", {}),
            power_factor=d.get("power_factor", 0.95),
            u_kv=d.get("u_kv", 0.4),
        )

    @classmethod
    def load(cls, path) -> "GridModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
