from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from ..core import GeoRef, KinematicState, Point, SimClock, local_to_geo
from ..exceptions import InvalidValueError
from ..messages.schema import Cpm, PerceivedObject, StationId, StationType, check_station_id

DEFAULT_RSU_SENSOR_RANGE_M = 80.0
DEFAULT_CPM_INTERVAL_TICKS = 10
DEFAULT_RSU_CONFIDENCE = 0.7


@dataclass(frozen=True)
class RsuScript:
    """A road-side unit that shares what its sensors see through CPMs."""

    station_id: StationId
    position: Point
    sensor_range_m: float = DEFAULT_RSU_SENSOR_RANGE_M
    cpm_interval_ticks: int = DEFAULT_CPM_INTERVAL_TICKS
    confidence: float = DEFAULT_RSU_CONFIDENCE

    def __post_init__(self):
        check_station_id(self.station_id)
        if not (math.isfinite(self.sensor_range_m) and self.sensor_range_m > 0):
            raise InvalidValueError(f"sensor_range_m must be > 0, got {self.sensor_range_m!r}")
        if self.cpm_interval_ticks <= 0:
            raise InvalidValueError(f"cpm_interval_ticks must be > 0, got {self.cpm_interval_ticks!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidValueError(f"confidence must lie in [0, 1], got {self.confidence!r}")


def rsu_step(
    script: RsuScript,
    clock: SimClock,
    road_users: Sequence[Tuple[StationType, KinematicState]],
    ref: GeoRef,
) -> Optional[Cpm]:
    if clock.tick_index % script.cpm_interval_ticks != 0:
        return None
    objects = tuple(
        PerceivedObject(
            rel_position=state.pos - script.position,
            speed=state.speed,
            heading=state.heading,
            object_type=kind,
            confidence=script.confidence,
        )
        for kind, state in road_users
        if state.pos.distance_to(script.position) <= script.sensor_range_m
    )
    lat, lon = local_to_geo(ref, script.position)
    return Cpm(script.station_id, lat, lon, objects)
