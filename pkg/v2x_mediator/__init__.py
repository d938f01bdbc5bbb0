from .core import (
    GeoRef,
    KinematicState,
    Point,
    SimClock,
    geo_to_local,
    local_to_geo,
    predict_position,
)
from .hazard import (
    HazardDecision,
    HazardLevel,
    TimeInterval,
    Zod,
    classify,
    contains,
    incursion_interval,
    worst_decision,
)
from .netsim import ChannelConfig, Mailbox, broadcast, poll, transmit
from .harness import Scenario, compute_metrics, load_scenario, run, sweep

__all__ = [
    "GeoRef",
    "KinematicState",
    "Point",
    "SimClock",
    "geo_to_local",
    "local_to_geo",
    "predict_position",
    "HazardDecision",
    "HazardLevel",
    "TimeInterval",
    "Zod",
    "classify",
    "contains",
    "incursion_interval",
    "worst_decision",
    "ChannelConfig",
    "Mailbox",
    "broadcast",
    "poll",
    "transmit",
    "Scenario",
    "compute_metrics",
    "load_scenario",
    "run",
    "sweep",
]

__doc__ = """
v2x_mediator: Robot-Mediated Pedestrian Crossings over V2X

A deterministic, tick-based simulator of a sidewalk robot that helps
pedestrians cross a road. The robot watches for vehicles heading into a
rectangular Zone of Danger in front of it, holds the pedestrian back while a
vehicle is about to enter or is inside the zone, and warns V2X-equipped
vehicles with a "human presence on the road" DENM until the way is clear.

Usage:
------
Run a bundled scenario and look at the outcome:

    from v2x_mediator import load_scenario, run

    scenario = load_scenario("poc_kit_campus")
    events, metrics = run(scenario)
    print(metrics.violations, metrics.denm_count)

Or from a shell:

    v2x-mediator run poc_kit_campus --trace poc.jsonl
    v2x-mediator sweep poc_kit_campus --param loss_probability --values 0,0.5,1

Layout:
-------
- `core`: points, kinematics, the simulation clock and the local/WGS84 frame.
- `hazard`: when does a vehicle enter the zone, and how urgent is that.
- `messages`: CAM, DENM and CPM types, their binary codec, and CPM fusion.
- `netsim`: a lossy, delayed broadcast channel driven by a seeded PRNG.
- `agents`: the robot state machine, scripted vehicles, pedestrians and
  road-side units.
- `harness`: scenario files, the tick loop, traces, metrics and the CLI.

Note:
-----
- Runs are a pure function of the scenario and its seed. The same inputs
  give byte-identical trace files.
- The robot decides from its own sensors as well as from received messages,
  so a dead channel costs the vehicles their warnings but never lets a
  pedestrian cross in front of a vehicle the robot can see.
"""
