import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from gridsynth import geodata, loads  # noqa: E402
from gridsynth.fixtures import bundled_config, synth_town  # noqa: E402

DATA = Path(__file__).parent / "data"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def corpus():
    return DATA


@pytest.fixture(scope="session")
def bundled():
    """Paths of the bundled 40-building town."""
    cfg = bundled_config()
    return {
        "config": cfg,
        "overpass": cfg.with_name("synthetic_town.json"),
        "heights": cfg.with_name("synthetic_town_heights.csv"),
        "meters": cfg.with_name("synthetic_town_meters.csv"),
        "known_stations": cfg.with_name("synthetic_town_stations.csv"),
    }


@pytest.fixture(scope="session")
def town40():
    return synth_town(40, seed=7)


@pytest.fixture
def parsed40(town40):
    """Street graph and buildings of the 40-building town with side tables applied."""
    graph, buildings = geodata.parse_overpass(town40.overpass)
    buildings = geodata.load_heights(buildings, town40.heights)
    buildings = geodata.load_meters(buildings, town40.meters)
    return graph, buildings


@pytest.fixture
def params():
    return loads.EstimationParams()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        line, detail = results[number]
        terminalreporter.write_line(line + (f"  -- {detail}" if detail else ""))
