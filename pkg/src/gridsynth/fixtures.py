"""Synthetic towns for tests, demos and benchmarks.

A town is a rectangular street grid (100 m blocks) with buildings set back
from the streets, one footpath across a block, and an HV/MV substation
node just outside the south-west corner.  The generator also writes the
side tables a real study would have: building heights, meter counts and a
set of "known" transformer positions.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .geodata import GeoPoint, offset_point

BLOCK_M = 100.0
PLOTS_ALONG = (35.0, 50.0, 65.0)
SETBACK_M = 6.0
ORIGIN = GeoPoint(49.0, 8.4)


def bundled_config() -> Path:
    """Path of the run config for the bundled 40-building town (all six variants)."""
    return Path(str(resources.files("gridsynth") / "data" / "synthetic_town.toml"))


@dataclass
class Town:
    overpass: dict
    heights: dict[str, float]
    meters: dict[str, int]
    stations: list[tuple[str, float, float]]
    n_streets: int

    def write(self, out_dir, name: str = "town", config: bool = True) -> dict[str, Path]:
        """Write the Overpass JSON, side tables and a ready-to-run config."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "overpass": out / f"{name}.json",
            "heights": out / f"{name}_heights.csv",
            "meters": out / f"{name}_meters.csv",
            "known_stations": out / f"{name}_stations.csv",
        }
        paths["overpass"].write_text(json.dumps(self.overpass, indent=1) + "\n", encoding="utf-8")
        _write_csv(paths["heights"], ["id", "height_m"], sorted(self.heights.items()))
        _write_csv(paths["meters"], ["id", "meter_count"], sorted(self.meters.items()))
        _write_csv(paths["known_stations"], ["station_id", "lat", "lon"], self.stations)
        if config:
            paths["config"] = out / f"{name}.toml"
            paths["config"].write_text(
                "[input]\n"
                f'overpass = "{paths["overpass"].name}"\n'
                f'heights = "{paths["heights"].name}"\n'
                f'meters = "{paths["meters"].name}"\n'
                f'known_stations = "{paths["known_stations"].name}"\n\n'
                "[variant]\n"
                'data = ["O2D", "O3D", "EM"]\n'
                'transformers = ["T_K", "T_C"]\n\n'
                "[run]\nseed = 7\n",
                encoding="utf-8",
            )
        return paths


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _round(p: GeoPoint) -> GeoPoint:
    return GeoPoint(round(p.lat, 8), round(p.lon, 8))


def _grid_side(n_buildings: int) -> int:
    return max(2, math.ceil(math.sqrt(n_buildings / (4 * len(PLOTS_ALONG)) * 1.35)))


def synth_town(n_buildings: int = 40, seed: int = 7, side: int | None = None, n_stations: int | None = None,
               origin: GeoPoint = ORIGIN) -> Town:
    """Generate a deterministic synthetic town with ``n_buildings`` buildings.

    The street grid has ``side x side`` blocks (chosen from the building count
    by default), so ``2 * side * (side + 1)`` street ways plus one footpath.
    """
    rng = np.random.default_rng(seed)
    side = side or _grid_side(n_buildings)
    plots = []
    for bx in range(side):
        for by in range(side):
            x0, y0 = bx * BLOCK_M, by * BLOCK_M
            for t in PLOTS_ALONG:
                plots += [
                    (x0 + t, y0, 0.0, 1.0),                # south side, facing north into the block
                    (x0 + t, y0 + BLOCK_M, 0.0, -1.0),     # north side
                    (x0, y0 + t, 1.0, 0.0),                # west side
                    (x0 + BLOCK_M, y0 + t, -1.0, 0.0),     # east side
                ]
    if n_buildings > len(plots):
        raise ValueError(f"{n_buildings} buildings do not fit on {len(plots)} plots; increase side")
    chosen = sorted(rng.choice(len(plots), size=n_buildings, replace=False).tolist())

    elements = []
    next_id = [1]

    def node(p: GeoPoint, tags=None) -> int:
        nid = next_id[0]
        next_id[0] += 1
        el = {"type": "node", "id": nid, "lat": _round(p).lat, "lon": _round(p).lon}
        if tags:
            el["tags"] = tags
        elements.append(el)
        return nid

    def at(x, y):
        return offset_point(origin, x, y)

    # street grid: intersections plus a midpoint node on every segment
    inter = {(i, j): node(at(i * BLOCK_M, j * BLOCK_M)) for i in range(side + 1) for j in range(side + 1)}
    ways = []
    way_id = 1000
    names = iter(f"Street {k}" for k in range(1, 10_000))
    mids = {}
    for j in range(side + 1):
        for i in range(side):
            mid = node(at((i + 0.5) * BLOCK_M, j * BLOCK_M))
            mids[("h", i, j)] = mid
            ways.append({"type": "way", "id": way_id, "nodes": [inter[i, j], mid, inter[i + 1, j]],
                         "tags": {"highway": "residential", "name": next(names)}})
            way_id += 1
    for i in range(side + 1):
        for j in range(side):
            mid = node(at(i * BLOCK_M, (j + 0.5) * BLOCK_M))
            mids[("v", i, j)] = mid
            ways.append({"type": "way", "id": way_id, "nodes": [inter[i, j], mid, inter[i, j + 1]],
                         "tags": {"highway": "residential", "name": next(names)}})
            way_id += 1
    # footpath across the first block, west midpoint to east midpoint
    ways.append({"type": "way", "id": way_id, "nodes": [mids[("v", 0, 0)], mids[("v", 1, 0)]],
                 "tags": {"highway": "footway"}})
    n_streets = len(ways)

    node(at(-25.0, -25.0), {"power": "substation", "voltage": "110000;20000"})

    heights, meters = {}, {}
    bid = 5000
    specials = {0: "school", 1: "kindergarten", 2: "community_centre"} if n_buildings >= 20 else {}
    garage_slot = 3 if n_buildings >= 20 else None
    order = rng.permutation(n_buildings)
    buildings = []
    for rank, plot_idx in zip(order, chosen):
        px, py, nx_, ny_ = plots[plot_idx]
        tags = {"building": "house"}
        if rank in specials:
            kind = specials[rank]
            width, depth, height, levels = 18.0, 19.0, 8.0, 2
            tags = {"building": "school" if kind == "school" else "yes", "amenity": kind, "building:levels": str(levels)}
            n_meter = None
        elif rank == garage_slot:
            width, depth, height = 6.0, 6.0, 2.5
            tags = {"building": "garage"}
            n_meter = None
        elif rng.random() < 0.25:
            width, depth = float(rng.uniform(14, 18)), float(rng.uniform(12, 17))
            stories = int(rng.integers(3, 7))
            height = round(stories * float(rng.uniform(2.7, 3.0)) + 1.0, 1)
            tags = {"building": "apartments"}
            n_meter = int(rng.integers(2 * stories, 4 * stories + 1))
        else:
            width, depth = float(rng.uniform(8, 12)), float(rng.uniform(8, 12))
            stories = int(rng.integers(1, 3))
            height = round(stories * float(rng.uniform(2.6, 3.0)) + 1.5, 1)
            tags = {"building": "house" if stories == 1 else "detached"}
            n_meter = int(rng.integers(1, 3))
            if rng.random() < 0.3:
                tags["building:levels"] = str(stories)
        # rectangle: front edge at SETBACK_M from the street centre line
        tx, ty = -ny_, nx_  # along the street
        cx = px + nx_ * (SETBACK_M + depth / 2)
        cy = py + ny_ * (SETBACK_M + depth / 2)
        corners = []
        for sa, sd in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            corners.append(at(cx + tx * sa * width / 2 + nx_ * sd * depth / 2,
                              cy + ty * sa * width / 2 + ny_ * sd * depth / 2))
        refs = [node(c) for c in corners]
        wid = str(bid)
        buildings.append({"type": "way", "id": bid, "nodes": refs + [refs[0]], "tags": tags})
        heights[wid] = float(height)
        if n_meter is not None:
            meters[wid] = n_meter
        bid += 1

    elements += ways + buildings
    doc = {"version": 0.6, "generator": "gridsynth synthetic town", "elements": elements}

    n_stations = n_stations or max(1, round(n_buildings / 35))
    stations = []
    rs = np.random.default_rng(seed + 1)
    extent = side * BLOCK_M
    for k in range(n_stations):
        # spread along a diagonal band, jittered, placed near streets
        frac = (k + 0.5) / n_stations
        x = frac * extent + float(rs.uniform(-15, 15))
        y = (1 - frac) * extent * 0.8 + extent * 0.1 + float(rs.uniform(-15, 15))
        x = round(x / BLOCK_M) * BLOCK_M + 8.0
        p = _round(at(x, y))
        stations.append((f"K{k + 1}", p.lat, p.lon))
    return Town(doc, heights, meters, stations, n_streets)


# ---------------------------------------------------------------------------
# small hand-made documents used by the parser tests


def square_building_doc(side_m: float = 10.0, origin: GeoPoint = ORIGIN) -> dict:
    """One street (a four-node polyline) and one ``side_m`` x ``side_m`` building beside it."""
    pts = [offset_point(origin, x, y) for x, y in ((0, 20), (side_m, 20), (side_m, 20 + side_m), (0, 20 + side_m))]
    street = [offset_point(origin, x, 0) for x in (-50, 0, 30, 60)]
    els = [{"type": "node", "id": i + 1, "lat": p.lat, "lon": p.lon} for i, p in enumerate(pts + street)]
    els.append({"type": "way", "id": 10, "nodes": [5, 6, 7, 8], "tags": {"highway": "residential"}})
    els.append({"type": "way", "id": 20, "nodes": [1, 2, 3, 4, 1], "tags": {"building": "yes"}})
    return {"elements": els}


def disconnected_doc(base: dict) -> dict:
    """``base`` plus a two-way street island far from the main network."""
    doc = json.loads(json.dumps(base))
    origin = ORIGIN
    island = [offset_point(origin, 2000 + 60 * k, 2000) for k in range(3)]
    start = max(e["id"] for e in doc["elements"] if e["type"] == "node") + 1
    for k, p in enumerate(island):
        doc["elements"].append({"type": "node", "id": start + k, "lat": p.lat, "lon": p.lon})
    doc["elements"].append({"type": "way", "id": 90001, "nodes": [start, start + 1], "tags": {"highway": "service"}})
    doc["elements"].append({"type": "way", "id": 90002, "nodes": [start + 1, start + 2], "tags": {"highway": "track"}})
    return doc
