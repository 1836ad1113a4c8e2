"""Building load estimation from footprints, heights or meter counts.

Three estimation variants are supported:

``O2D``
    footprint area only, scaled by a global stories factor ``S_U``;
``O3D``
    footprint area plus building height (``H_i / h_f`` stories);
``EM``
    electricity-meter counts per building.

Annual energies are turned into quarter-hourly load series with the BDEW H0
household standard load profile (bundled as ``data/h0_profile.csv``).
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
import statistics
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import EstimationError

logger = logging.getLogger(__name__)

VARIANTS = ("O2D", "O3D", "EM")
RESIDENTIAL = "residential"
NONRESIDENTIAL_HANDLED = ("school", "kindergarten", "community")
DAY_TYPES = ("workday", "saturday", "sunday")
SEASONS = ("winter", "summer", "transition")
HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class EstimationParams:
    residents_per_unit: float = 1.7
    kwh_per_resident: float = 200.0
    kwh_per_m2: float = 9.0
    appliances_per_unit: float = 8.4
    kwh_per_appliance: float = 200.0
    floor_height_m: float = 2.6
    stories_factor: float = 2.0
    peak_kw_per_unit: float = 2.0
    nonres_intensity: dict = field(default_factory=lambda: {"school": 20.0, "kindergarten": 22.0, "community": 9.0})
    nonres_default_levels: int = 2
    nonres_peak_factor: float = 3.0
    units2d_mode: str = "literal"

    def __post_init__(self):
        scalars = (
            self.residents_per_unit, self.kwh_per_resident, self.kwh_per_m2, self.appliances_per_unit,
            self.kwh_per_appliance, self.floor_height_m, self.stories_factor, self.peak_kw_per_unit,
            self.nonres_default_levels, self.nonres_peak_factor,
        )
        if any(not v > 0 for v in scalars) or any(not v > 0 for v in self.nonres_intensity.values()):
            raise ValueError("estimation parameters must be strictly positive")
        if self.units2d_mode not in ("literal", "floor-scaled"):
            raise ValueError(f"unknown units2d_mode {self.units2d_mode!r}")


@dataclass(frozen=True)
class LoadEstimate:
    building_id: str
    energy_kwh: float
    units: float
    peak_kw: float
    variant: str
    klass: str = RESIDENTIAL


def unit_energy(params: EstimationParams, area: float) -> float:
    """Annual consumption (kWh) of one residential unit with floor area ``area`` m²."""
    if not area > 0:
        raise EstimationError(f"unit floor area must be positive, got {area}")
    return (params.residents_per_unit * params.kwh_per_resident
            + area * params.kwh_per_m2
            + params.appliances_per_unit * params.kwh_per_appliance)


def median_unit_area(buildings) -> float:
    areas = [b.area_m2 for b in buildings if b.klass == RESIDENTIAL]
    if not areas:
        raise EstimationError("no residential buildings to take the median area over")
    return float(statistics.median(areas))


def units_2d(area: float, unit_area: float, mode: str = "literal") -> float:
    """Residential units from footprint area.

    ``literal`` returns ``area/unit_area`` capped at 1; ``floor-scaled``
    returns ``max(area/unit_area, 1)``.
    """
    if not (area > 0 and unit_area > 0):
        raise EstimationError("areas must be positive")
    ratio = area / unit_area
    if mode == "literal":
        return ratio if ratio <= 1 else 1.0
    if mode == "floor-scaled":
        return max(ratio, 1.0)
    raise ValueError(f"unknown units2d mode {mode!r}")


def _residential(params, building, units, energy, variant):
    if building.klass != RESIDENTIAL:
        raise EstimationError(f"building {building.id} is {building.klass}, not residential")
    return LoadEstimate(building.id, energy, units, params.peak_kw_per_unit * units, variant)


def estimate_o2d(params: EstimationParams, building, unit_area: float) -> LoadEstimate:
    units = units_2d(building.area_m2, unit_area, params.units2d_mode) * params.stories_factor
    return _residential(params, building, units, units * unit_energy(params, unit_area), "O2D")


def estimate_o3d(params: EstimationParams, building, unit_area: float, fallbacks: list | None = None) -> LoadEstimate:
    """Height-based estimate; buildings without height fall back to :func:`estimate_o2d`.

    Fallbacks are recorded by appending the building id to ``fallbacks``.
    """
    if building.height_m is None:
        if fallbacks is not None:
            fallbacks.append(building.id)
        return estimate_o2d(params, building, unit_area)
    units = units_2d(building.area_m2, unit_area, params.units2d_mode) * building.height_m / params.floor_height_m
    return _residential(params, building, units, units * unit_energy(params, unit_area), "O3D")


def em_units(meters: int) -> float:
    """Household equivalents for ``meters`` meters; one common-area meter in
    buildings with three or more meters counts as 0.1 household."""
    return float(meters) if meters < 3 else meters - 0.9


def estimate_em(params: EstimationParams, building) -> LoadEstimate:
    n = building.meters_count
    if n is None:
        raise EstimationError(f"building {building.id} has no meter count")
    if building.height_m is not None:
        height = building.height_m
    elif building.levels is not None:
        height = building.levels * params.floor_height_m
    else:
        height = params.stories_factor * params.floor_height_m
    unit_area = building.area_m2 * (height / params.floor_height_m) / n
    units = em_units(n)
    return _residential(params, building, units, units * unit_energy(params, unit_area), "EM")


def estimate_nonresidential(params: EstimationParams, building, variant: str = "O2D") -> LoadEstimate | None:
    """Area-intensity estimate for schools, kindergartens and community centres.

    Returns ``None`` (with a logged warning) for unhandled classes.  Peak load
    is the mean power times ``nonres_peak_factor``.
    """
    if building.klass not in params.nonres_intensity:
        logger.warning("building %s (%s) has no load model; excluded", building.id, building.klass)
        return None
    levels = building.levels or params.nonres_default_levels
    energy = building.area_m2 * levels * params.nonres_intensity[building.klass]
    peak = energy / HOURS_PER_YEAR * params.nonres_peak_factor
    return LoadEstimate(building.id, energy, 0.0, peak, variant, building.klass)


def estimate_all(params: EstimationParams, buildings, variant: str, report: dict | None = None) -> list[LoadEstimate]:
    """Estimate every building for one variant.

    Unhandled nonresidential buildings are skipped.  For ``EM``, buildings
    without meter counts fall back to the height-based estimate.  If given,
    ``report`` receives the lists ``excluded``, ``o3d_fallbacks`` and
    ``em_fallbacks``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    report = report if report is not None else {}
    report.update(excluded=[], o3d_fallbacks=[], em_fallbacks=[])
    residential = [b for b in buildings if b.klass == RESIDENTIAL]
    unit_area = median_unit_area(residential) if residential else None
    out = []
    for b in buildings:
        if b.klass != RESIDENTIAL:
            est = estimate_nonresidential(params, b, variant)
            if est is None:
                report["excluded"].append(b.id)
            else:
                out.append(est)
        elif variant == "O2D":
            out.append(estimate_o2d(params, b, unit_area))
        elif variant == "O3D":
            out.append(estimate_o3d(params, b, unit_area, report["o3d_fallbacks"]))
        else:
            try:
                out.append(estimate_em(params, b))
            except EstimationError:
                report["em_fallbacks"].append(b.id)
                out.append(estimate_o3d(params, b, unit_area, report["o3d_fallbacks"]))
    if report["em_fallbacks"]:
        logger.warning("%d building(s) without meter data used the height estimate", len(report["em_fallbacks"]))
    return out


def write_estimates_csv(path, estimates):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["building_id", "variant", "E_kwh", "nU", "P_peak_kw"])
        for e in estimates:
            w.writerow([e.building_id, e.variant, repr(e.energy_kwh), repr(e.units), repr(e.peak_kw)])


# ---------------------------------------------------------------------------
# H0 profile

DEFAULT_SEASONS = {
    # (month, day) inclusive bounds; whatever is not winter/summer is transition
    "winter": ((11, 1), (3, 20)),
    "summer": ((5, 15), (9, 14)),
}


def season_of(day: dt.date, bounds=DEFAULT_SEASONS) -> str:
    md = (day.month, day.day)
    (ws, we) = bounds["winter"]
    if md >= ws or md <= we:
        return "winter"
    (ss, se) = bounds["summer"]
    if ss <= md <= se:
        return "summer"
    return "transition"


def day_type_of(day: dt.date) -> str:
    wd = day.weekday()
    return "workday" if wd < 5 else ("saturday" if wd == 5 else "sunday")


class H0Profile:
    """Quarter-hourly H0 coefficients keyed by ``(daytype, season)``.

    Coefficients are energy fractions per quarter hour; a normalized profile
    sums to 1 over :attr:`reference_year`.
    """

    reference_year = 2023

    def __init__(self, values: dict, seasons=DEFAULT_SEASONS):
        self.values = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        self.seasons = seasons
        missing = [(d, s) for d in DAY_TYPES for s in SEASONS if (d, s) not in self.values]
        if missing:
            raise ValueError(f"profile lacks day types {missing}")
        for k, v in self.values.items():
            if v.shape != (96,) or (v < 0).any():
                raise ValueError(f"profile day type {k} must hold 96 non-negative values")

    @classmethod
    def from_csv(cls, path=None, seasons=DEFAULT_SEASONS) -> "H0Profile":
        if path is None:
            path = resources.files("gridsynth") / "data" / "h0_profile.csv"
        values: dict = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (row["daytype"], row["season"])
                values.setdefault(key, np.zeros(96))[int(row["quarter_hour_index"])] = float(row["value"])
        return cls(values, seasons)

    def day_keys(self, year: int) -> list[tuple[str, str]]:
        start = dt.date(year, 1, 1)
        n = (dt.date(year + 1, 1, 1) - start).days
        return [(day_type_of(d), season_of(d, self.seasons)) for d in (start + dt.timedelta(i) for i in range(n))]

    def annual_sum(self, year: int | None = None) -> float:
        keys = self.day_keys(year or self.reference_year)
        return float(sum(self.values[k].sum() for k in keys))

    def normalized(self) -> "H0Profile":
        total = self.annual_sum()
        return H0Profile({k: v / total for k, v in self.values.items()}, self.seasons)

    def energy_fractions(self, year: int) -> np.ndarray:
        """Per-quarter-hour energy fractions for ``year``, summing to 1."""
        series = np.concatenate([self.values[k] for k in self.day_keys(year)])
        return series / series.sum()


def load_series(estimate: LoadEstimate, profile: H0Profile, year: int) -> np.ndarray:
    """Quarter-hourly power (kW) over ``year`` whose energy integral is ``E_i``."""
    return profile.energy_fractions(year) * estimate.energy_kwh * 4.0


def series_timestamps(year: int) -> list[dt.datetime]:
    start = dt.datetime(year, 1, 1)
    n = (dt.datetime(year + 1, 1, 1) - start).days * 96
    return [start + dt.timedelta(minutes=15 * i) for i in range(n)]


def annual_energy(series: np.ndarray) -> float:
    return float(np.sum(series) * 0.25)


def total_peak(estimates) -> float:
    return math.fsum(e.peak_kw for e in estimates)
