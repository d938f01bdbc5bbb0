import copy
from pathlib import Path

import pytest

from v2x_mediator.harness import load_scenario, scenario_from_dict

GOLDEN_DIR = Path(__file__).parent / "golden"

# the campus proof of concept, as plain data so tests can tweak single fields
POC_DATA = {
    "name": "poc",
    "seed": 7,
    "tick_duration_s": 0.1,
    "duration_ticks": 600,
    "geo_ref": {"lat": 49.0113, "lon": 8.4162},
    "robot": {
        "station_id": 1000,
        "position": [0.0, 0.0],
        "threshold_s": 5.0,
        "zod": {"ll": 30.0, "rl": 30.0, "uw": 0.0, "lw": 30.0},
    },
    "channel": {"loss_probability": 0.0, "latency_ticks": 1, "jitter_ticks": 0},
    "vehicles": [
        {
            "station_id": 101,
            "position": [-50.0, -15.0],
            "speed": 5.0,
            "heading_deg": 0.0,
            "cam_interval_ticks": 1,
        },
    ],
    "pedestrians": [
        {"id": 1, "position": [0.5, 3.0], "compliant": True, "facing_robot": True},
    ],
}


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR


@pytest.fixture
def poc_scenario():
    return load_scenario("poc_kit_campus")


@pytest.fixture
def poc_data():
    return copy.deepcopy(POC_DATA)


@pytest.fixture
def make_scenario():
    """Build a scenario from the proof-of-concept data with top-level sections replaced."""

    def build(**sections):
        data = copy.deepcopy(POC_DATA)
        for key, value in sections.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key].update(value)
            else:
                data[key] = value
        return scenario_from_dict(data)

    return build
