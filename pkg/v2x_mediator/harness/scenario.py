"""Scenario files.

A scenario is a TOML document::

    name = "poc_kit_campus"
    seed = 7
    tick_duration_s = 0.1
    duration_ticks = 600

    [geo_ref]
    lat = 49.0113
    lon = 8.4162

    [robot]
    station_id = 1000
    position = [0.0, 0.0]
    threshold_s = 5.0
    zod = { ll = 30.0, rl = 30.0, uw = 0.0, lw = 30.0 }

    [channel]
    loss_probability = 0.0
    latency_ticks = 1

    [[vehicles]]
    station_id = 101
    position = [-50.0, -15.0]
    speed = 5.0
    heading_deg = 0.0

    [[pedestrians]]
    id = 1
    position = [0.5, 3.0]

    [[rsus]]
    station_id = 500
    position = [0.0, -35.0]

Omitted keys take the defaults of the module that owns the behaviour. Unknown
keys are rejected so that typos do not silently fall back to a default.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import tomlkit
import tomlkit.exceptions

from ..agents.ebike import EbikeScript
from ..agents.pedestrian import CROSSING_OVERSHOOT_M, DEFAULT_APPROACH_SPEED_MPS, PedestrianScript
from ..agents.robot import RobotConfig
from ..agents.rsu import RsuScript
from ..core import DEFAULT_TICK_DURATION_S, GeoRef, KinematicState, Point
from ..exceptions import InvalidValueError, ScenarioParseError, ScenarioValidationError
from ..hazard import DEFAULT_THRESHOLD_S, Zod
from ..messages.schema import StationId, StationType
from ..netsim import ChannelConfig

logger = logging.getLogger(__name__)

BUNDLED_SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"
DEFAULT_GEO_REF = (49.0113, 8.4162)
DEFAULT_DURATION_TICKS = 600

SWEEP_PARAMETERS = ("loss_probability", "latency_ticks", "threshold")

_STATION_TYPE_NAMES = {
    "cyclist": StationType.CYCLIST,
    "moped": StationType.MOPED,
    "passenger_car": StationType.PASSENGER_CAR,
    "bus": StationType.BUS,
}


@dataclass(frozen=True)
class RobotSetup:
    zod: Zod
    threshold: float = DEFAULT_THRESHOLD_S
    config: RobotConfig = field(default_factory=RobotConfig)

    @property
    def position(self) -> Point:
        return self.zod.anchor


@dataclass(frozen=True)
class Scenario:
    name: str
    geo_ref: GeoRef
    robot: RobotSetup
    tick_duration: float = DEFAULT_TICK_DURATION_S
    duration_ticks: int = DEFAULT_DURATION_TICKS
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    vehicles: Tuple[EbikeScript, ...] = ()
    pedestrians: Tuple[PedestrianScript, ...] = ()
    rsus: Tuple[RsuScript, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.tick_duration) and self.tick_duration > 0):
            raise ScenarioValidationError("tick_duration_s", f"must be > 0, got {self.tick_duration!r}")
        if not isinstance(self.duration_ticks, int) or self.duration_ticks <= 0:
            raise ScenarioValidationError("duration_ticks", f"must be a positive integer, got {self.duration_ticks!r}")
        try:
            channel = replace(self.channel, seed=self.seed)
        except InvalidValueError as e:
            raise ScenarioValidationError("seed", str(e)) from None
        object.__setattr__(self, "channel", channel)
        _check_unique_ids(self)
        object.__setattr__(self, "vehicles", tuple(sorted(self.vehicles, key=lambda v: v.station_id)))
        object.__setattr__(self, "pedestrians", tuple(sorted(self.pedestrians, key=lambda p: p.pedestrian_id)))
        object.__setattr__(self, "rsus", tuple(sorted(self.rsus, key=lambda r: r.station_id)))

    @property
    def station_ids(self) -> List[StationId]:
        return [self.robot.config.station_id] + [v.station_id for v in self.vehicles] + [r.station_id for r in self.rsus]

    def with_seed(self, seed: int) -> Scenario:
        return replace(self, seed=seed)


def _check_unique_ids(scenario: Scenario):
    seen = {scenario.robot.config.station_id: "robot.station_id"}
    for section, items in (("vehicles", scenario.vehicles), ("rsus", scenario.rsus)):
        for i, item in enumerate(items):
            path = f"{section}[{i}].station_id"
            if item.station_id in seen:
                raise ScenarioValidationError(path, f"station id {item.station_id} already used by {seen[item.station_id]}")
            seen[item.station_id] = path
    pedestrian_ids = set()
    for i, ped in enumerate(scenario.pedestrians):
        if ped.pedestrian_id in pedestrian_ids:
            raise ScenarioValidationError(f"pedestrians[{i}].id", f"pedestrian id {ped.pedestrian_id} is not unique")
        pedestrian_ids.add(ped.pedestrian_id)


class _Table:
    """Typed, path-aware access to one TOML table; tracks which keys were read."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ScenarioParseError("expected a table", field=path or None)
        self.data = data
        self.path = path
        self.used = set()

    def path_of(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, kind: Union[type, Tuple[type, ...]], default: Any = None) -> Any:
        self.used.add(key)
        if key not in self.data:
            return default
        value = self.data[key]
        # TOML integers are acceptable wherever a float is expected
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if isinstance(value, bool) and kind is not bool:
            raise ScenarioParseError(f"expected {_kind_name(kind)}, got a boolean", field=self.path_of(key))
        if not isinstance(value, kind):
            raise ScenarioParseError(f"expected {_kind_name(kind)}, got {type(value).__name__}", field=self.path_of(key))
        return value

    def require(self, key: str, kind) -> Any:
        if key not in self.data:
            raise ScenarioValidationError(self.path_of(key), "is required")
        return self.get(key, kind)

    def point(self, key: str, default: Optional[Point] = None) -> Point:
        if key not in self.data and default is not None:
            self.used.add(key)
            return default
        raw = self.require(key, list)
        if len(raw) != 2 or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in raw):
            raise ScenarioParseError("expected [x, y]", field=self.path_of(key))
        try:
            return Point(float(raw[0]), float(raw[1]))
        except InvalidValueError as e:
            raise ScenarioValidationError(self.path_of(key), str(e)) from None

    def table(self, key: str) -> _Table:
        self.used.add(key)
        return _Table(self.data.get(key, {}), self.path_of(key))

    def tables(self, key: str) -> List[_Table]:
        self.used.add(key)
        items = self.data.get(key, [])
        if not isinstance(items, list):
            raise ScenarioParseError("expected an array of tables", field=self.path_of(key))
        return [_Table(item, f"{self.path_of(key)}[{i}]") for i, item in enumerate(items)]

    def non_negative(self, key: str, kind, default: Any) -> Any:
        value = self.get(key, kind, default)
        if value is not None and not value >= 0:
            raise ScenarioValidationError(self.path_of(key), f"must be >= 0, got {value!r}")
        return value

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ScenarioValidationError(self.path_of(extra[0]), "unknown field")


def _kind_name(kind) -> str:
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return {float: "a number", int: "an integer", str: "a string", bool: "a boolean",
            list: "an array", dict: "a table"}.get(kind, kind.__name__)


def _construct(path: str, factory: Callable, **kwargs):
    try:
        return factory(**kwargs)
    except InvalidValueError as e:
        raise ScenarioValidationError(path, str(e)) from None


def _robot(t: _Table) -> RobotSetup:
    position = t.point("position", Point(0.0, 0.0))
    zod_table = t.table("zod")
    zod = _construct(
        zod_table.path, Zod,
        anchor=position,
        ll=zod_table.require("ll", float),
        rl=zod_table.require("rl", float),
        uw=zod_table.require("uw", float),
        lw=zod_table.require("lw", float),
    )
    zod_table.finish()
    threshold = t.get("threshold_s", float, DEFAULT_THRESHOLD_S)
    if not threshold > 0:
        raise ScenarioValidationError(t.path_of("threshold_s"), f"must be > 0, got {threshold!r}")
    defaults = RobotConfig()
    overrides = {}
    for name in ("detection_range_m", "sensor_range_m"):
        overrides[name] = t.get(name, float, getattr(defaults, name))
    for name in ("station_id", "patience_ticks", "crossing_timeout_ticks", "cam_interval_ticks",
                 "vehicle_stale_ticks", "denm_repeat_ticks"):
        overrides[name] = t.get(name, int, getattr(defaults, name))
    config = _construct(t.path, RobotConfig, **overrides)
    t.finish()
    return RobotSetup(zod, threshold, config)


def _vehicle(t: _Table) -> EbikeScript:
    type_name = t.get("station_type", str, "cyclist")
    if type_name not in _STATION_TYPE_NAMES:
        raise ScenarioValidationError(
            t.path_of("station_type"), f"must be one of {', '.join(_STATION_TYPE_NAMES)}, got {type_name!r}"
        )
    speed = t.non_negative("speed", float, 0.0)
    changes = []
    for i, change in enumerate(t.get("speed_changes", list, [])):
        where = f"{t.path_of('speed_changes')}[{i}]"
        if (not isinstance(change, list) or len(change) != 2 or not isinstance(change[0], int)
                or not isinstance(change[1], (int, float)) or isinstance(change[1], bool)):
            raise ScenarioParseError("expected [tick, speed]", field=where)
        if change[0] < 0 or change[1] < 0:
            raise ScenarioValidationError(where, f"tick and speed must be >= 0, got {change!r}")
        changes.append((change[0], float(change[1])))
    initial = _construct(
        t.path, KinematicState,
        pos=t.point("position"),
        speed=speed,
        heading=math.radians(t.get("heading_deg", float, 0.0)),
    )
    script = _construct(
        t.path, EbikeScript,
        station_id=StationId(t.require("station_id", int)),
        initial=initial,
        station_type=_STATION_TYPE_NAMES[type_name],
        speed_changes=tuple(changes),
        v2x_enabled=t.get("v2x_enabled", bool, True),
        cam_interval_ticks=t.get("cam_interval_ticks", int, EbikeScript.cam_interval_ticks),
        denm_validity_ticks=t.get("denm_validity_ticks", int, EbikeScript.denm_validity_ticks),
    )
    t.finish()
    return script


def _pedestrian(t: _Table, robot: RobotSetup) -> PedestrianScript:
    script = _construct(
        t.path, PedestrianScript,
        pedestrian_id=t.require("id", int),
        start=t.point("position"),
        robot_position=robot.position,
        crossing_target_y=t.get("crossing_target_y", float, robot.zod.y_min - CROSSING_OVERSHOOT_M),
        spawn_tick=t.non_negative("spawn_tick", int, 0),
        approach_speed=t.non_negative("approach_speed", float, DEFAULT_APPROACH_SPEED_MPS),
        facing_robot=t.get("facing_robot", bool, True),
        compliant=t.get("compliant", bool, True),
        noncompliant_delay_ticks=t.non_negative("noncompliant_delay_ticks", int, 0),
    )
    t.finish()
    return script


def _rsu(t: _Table) -> RsuScript:
    script = _construct(
        t.path, RsuScript,
        station_id=StationId(t.require("station_id", int)),
        position=t.point("position"),
        sensor_range_m=t.get("sensor_range_m", float, RsuScript.sensor_range_m),
        cpm_interval_ticks=t.get("cpm_interval_ticks", int, RsuScript.cpm_interval_ticks),
        confidence=t.get("confidence", float, RsuScript.confidence),
    )
    t.finish()
    return script


def scenario_from_dict(data: Dict[str, Any], default_name: str = "scenario") -> Scenario:
    """Build a validated `Scenario` from plain (already parsed) TOML data."""
    root = _Table(data, "")

    geo = root.table("geo_ref")
    geo_ref = _construct(
        "geo_ref", GeoRef,
        origin_lat=geo.get("lat", float, DEFAULT_GEO_REF[0]),
        origin_lon=geo.get("lon", float, DEFAULT_GEO_REF[1]),
    )
    geo.finish()

    robot = _robot(root.table("robot"))

    ch = root.table("channel")
    channel = _construct(
        "channel", ChannelConfig,
        range_m=ch.get("range_m", float, ChannelConfig.range_m),
        loss_probability=ch.get("loss_probability", float, ChannelConfig.loss_probability),
        latency_ticks=ch.get("latency_ticks", int, ChannelConfig.latency_ticks),
        jitter_ticks=ch.get("jitter_ticks", int, ChannelConfig.jitter_ticks),
    )
    ch.finish()

    seed = root.get("seed", int, 0)
    scenario = Scenario(
        name=root.get("name", str, default_name),
        geo_ref=geo_ref,
        robot=robot,
        tick_duration=root.get("tick_duration_s", float, DEFAULT_TICK_DURATION_S),
        duration_ticks=root.get("duration_ticks", int, DEFAULT_DURATION_TICKS),
        channel=channel,
        vehicles=tuple(_vehicle(t) for t in root.tables("vehicles")),
        pedestrians=tuple(_pedestrian(t, robot) for t in root.tables("pedestrians")),
        rsus=tuple(_rsu(t) for t in root.tables("rsus")),
        seed=seed,
    )
    root.finish()
    return scenario


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    try:
        document = tomlkit.parse(text)
    except tomlkit.exceptions.ParseError as e:
        raise ScenarioParseError(f"invalid TOML: {e}", line=e.line) from None
    return scenario_from_dict(document.unwrap(), default_name)


def resolve_scenario_path(name_or_path: Union[str, Path]) -> Path:
    """A path to an existing file, or the name of a bundled scenario."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = BUNDLED_SCENARIO_DIR / f"{path.stem}.toml"
    if path.parent == Path(".") and bundled.is_file():
        return bundled
    raise ScenarioParseError(f"no scenario file or bundled scenario named {str(name_or_path)!r}")


def bundled_scenarios() -> List[str]:
    return sorted(p.stem for p in BUNDLED_SCENARIO_DIR.glob("*.toml"))


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load and validate a scenario file (or a bundled scenario by name).

    Raises
    ------
    ScenarioParseError
        The file is not valid TOML or a field has the wrong type. Carries
        `line` and/or `field`.
    ScenarioValidationError
        A value breaks an invariant. Carries the dotted `field` path and a
        `reason`.
    """
    path = resolve_scenario_path(path)
    scenario = parse_scenario(path.read_text(encoding="utf-8"), default_name=path.stem)
    logger.debug(
        "loaded scenario %r: %d vehicles, %d pedestrians, %d rsus",
        scenario.name, len(scenario.vehicles), len(scenario.pedestrians), len(scenario.rsus),
    )
    return scenario


def with_parameter(scenario: Scenario, parameter: str, value: Union[int, float]) -> Scenario:
    """Copy of `scenario` with one sweepable parameter replaced."""
    try:
        if parameter == "loss_probability":
            return replace(scenario, channel=replace(scenario.channel, loss_probability=float(value)))
        if parameter == "latency_ticks":
            if isinstance(value, float) and not value.is_integer():
                raise InvalidValueError(f"latency_ticks must be an integer, got {value!r}")
            return replace(scenario, channel=replace(scenario.channel, latency_ticks=int(value)))
        if parameter == "threshold":
            if not float(value) > 0:
                raise InvalidValueError(f"threshold must be > 0, got {value!r}")
            return replace(scenario, robot=replace(scenario.robot, threshold=float(value)))
    except InvalidValueError as e:
        field_path = "robot.threshold_s" if parameter == "threshold" else f"channel.{parameter}"
        raise ScenarioValidationError(field_path, str(e)) from None
    raise ScenarioValidationError("parameter", f"must be one of {', '.join(SWEEP_PARAMETERS)}, got {parameter!r}")
