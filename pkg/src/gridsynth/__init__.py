"""gridsynth: synthetic 20 kV / 400 V distribution grids from open map data.

The package turns street and building geometry into a complete grid model:
per-building load estimates, secondary substations, a 20 kV ring through all
of them, and radial 400 V feeders sized from a cable catalog.  The result can
be evaluated with a radial load flow and compared against other models.
"""
from .errors import GridSynthError
from .geodata import Building, GeoPoint, StreetGraph, attach_buildings, parse_overpass, shortest_path
from .loads import EstimationParams, H0Profile, LoadEstimate, estimate_all
from .lv import FlowInstance, LvSolution, ip_cce, nb_cce, solve_milp
from .model import GridModel
from .mv import MvRing, Substation, TransformerParams, build_ring, place_substations, transformer_count
from .powerflow import RadialNetwork, solve_radial

__version__ = "0.1.0"

__all__ = [
    "Building", "EstimationParams", "FlowInstance", "GeoPoint", "GridModel", "GridSynthError", "H0Profile",
    "LoadEstimate", "LvSolution", "MvRing", "RadialNetwork", "StreetGraph", "Substation", "TransformerParams",
    "attach_buildings", "build_ring", "estimate_all", "ip_cce", "nb_cce", "parse_overpass", "place_substations",
    "shortest_path", "solve_milp", "solve_radial", "transformer_count",
]
