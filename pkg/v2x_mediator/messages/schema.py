"""V2X message schemas.

CAM, DENM and CPM carry semantics; the remaining message families the robot's
on-board unit is expected to speak (SPATEM, MAPEM, IVIM, SREM, SSEM) and the
proposed Robotic Unit Message (RUM) are declared as opaque stubs so that they
can travel through the channel and the codec untouched.

Numeric identifiers follow the ETSI ITS registries where one exists.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NewType, Tuple, Union

from ..core import TAU, GeoRef, KinematicState, Point, local_to_geo
from ..exceptions import InvalidValueError

StationId = NewType("StationId", int)

SCHEMA_VERSION = 1
MAX_STATION_ID = 0xFFFFFFFF
MAX_SEQUENCE_NUMBER = 0xFFFFFFFF
MAX_TICK = 0xFFFFFFFFFFFFFFFF


class MessageType(enum.IntEnum):
    DENM = 1
    CAM = 2
    SPATEM = 4
    MAPEM = 5
    IVIM = 6
    SREM = 9
    SSEM = 10
    CPM = 14
    RUM = 200


STUB_KINDS = frozenset({
    MessageType.SPATEM,
    MessageType.MAPEM,
    MessageType.IVIM,
    MessageType.SREM,
    MessageType.SSEM,
    MessageType.RUM,
})


class StationType(enum.IntEnum):
    UNKNOWN = 0
    PEDESTRIAN = 1
    CYCLIST = 2
    MOPED = 3
    PASSENGER_CAR = 5
    BUS = 6
    ROAD_SIDE_UNIT = 15
    # not in the ETSI registry
    ROBOT = 16


VEHICLE_TYPES = frozenset({
    StationType.CYCLIST,
    StationType.MOPED,
    StationType.PASSENGER_CAR,
    StationType.BUS,
})


class CauseCode(enum.IntEnum):
    TRAFFIC_CONDITION = 1
    ACCIDENT = 2
    ROADWORKS = 3
    HUMAN_PRESENCE_ON_THE_ROAD = 12
    COLLISION_RISK = 97
    DANGEROUS_SITUATION = 99


class DenmAction(enum.IntEnum):
    NEW = 0
    TERMINATE = 1


def check_station_id(station_id: int, name: str = "station_id"):
    if not isinstance(station_id, int) or not 0 <= station_id <= MAX_STATION_ID:
        raise InvalidValueError(f"{name} must be an unsigned 32-bit integer, got {station_id!r}")


def _check_lat_lon(lat: float, lon: float, name: str):
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise InvalidValueError(f"{name} latitude out of range: {lat!r}")
    if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
        raise InvalidValueError(f"{name} longitude out of range: {lon!r}")


def _coerce_enum(instance, attr: str, enum_cls):
    value = getattr(instance, attr)
    try:
        object.__setattr__(instance, attr, enum_cls(value))
    except ValueError:
        raise InvalidValueError(f"{attr} is not a valid {enum_cls.__name__}: {value!r}") from None


def _check_speed(speed: float, name: str = "speed"):
    if not (math.isfinite(speed) and speed >= 0):
        raise InvalidValueError(f"{name} must be finite and >= 0, got {speed!r}")


def _check_heading(heading: float, name: str = "heading"):
    if not (math.isfinite(heading) and 0.0 <= heading < TAU):
        raise InvalidValueError(f"{name} must be normalized to [0, 2pi), got {heading!r}")


@dataclass(frozen=True)
class Cam:
    station_id: StationId
    station_type: StationType
    latitude: float
    longitude: float
    speed: float
    heading: float
    generation_tick: int

    def __post_init__(self):
        check_station_id(self.station_id)
        _coerce_enum(self, "station_type", StationType)
        _check_lat_lon(self.latitude, self.longitude, "cam position")
        _check_speed(self.speed)
        _check_heading(self.heading)
        if not 0 <= self.generation_tick <= MAX_TICK:
            raise InvalidValueError(f"generation_tick out of range: {self.generation_tick!r}")

    @classmethod
    def from_kinematics(
        cls,
        station_id: StationId,
        station_type: StationType,
        state: KinematicState,
        ref: GeoRef,
        tick: int,
    ) -> Cam:
        lat, lon = local_to_geo(ref, state.pos)
        return cls(station_id, station_type, lat, lon, state.speed, state.heading, tick)


@dataclass(frozen=True)
class Denm:
    station_id: StationId
    cause_code: CauseCode
    event_latitude: float
    event_longitude: float
    action: DenmAction
    sequence_number: int

    def __post_init__(self):
        check_station_id(self.station_id)
        _coerce_enum(self, "cause_code", CauseCode)
        _coerce_enum(self, "action", DenmAction)
        _check_lat_lon(self.event_latitude, self.event_longitude, "denm event position")
        if not 0 <= self.sequence_number <= MAX_SEQUENCE_NUMBER:
            raise InvalidValueError(f"sequence_number out of range: {self.sequence_number!r}")

    @classmethod
    def human_presence(
        cls,
        station_id: StationId,
        position: Point,
        ref: GeoRef,
        action: DenmAction,
        sequence_number: int,
    ) -> Denm:
        lat, lon = local_to_geo(ref, position)
        return cls(
            station_id,
            CauseCode.HUMAN_PRESENCE_ON_THE_ROAD,
            lat,
            lon,
            action,
            sequence_number,
        )


@dataclass(frozen=True)
class PerceivedObject:
    """A detected road user, positioned relative to the reporting station."""

    rel_position: Point
    speed: float
    heading: float
    object_type: StationType
    confidence: float

    def __post_init__(self):
        _check_speed(self.speed, "object speed")
        _check_heading(self.heading, "object heading")
        _coerce_enum(self, "object_type", StationType)
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise InvalidValueError(f"confidence must lie in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True)
class Cpm:
    station_id: StationId
    origin_latitude: float
    origin_longitude: float
    objects: Tuple[PerceivedObject, ...] = field(default_factory=tuple)

    def __post_init__(self):
        check_station_id(self.station_id)
        _check_lat_lon(self.origin_latitude, self.origin_longitude, "cpm origin")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class StubMessage:
    """A message family whose payload this library carries but does not interpret."""

    kind: MessageType
    payload: bytes = b""

    def __post_init__(self):
        _coerce_enum(self, "kind", MessageType)
        if self.kind not in STUB_KINDS:
            raise InvalidValueError(f"{self.kind!r} is not a stub message kind")
        object.__setattr__(self, "payload", bytes(self.payload))


V2xMessage = Union[Cam, Denm, Cpm, StubMessage]


def message_type(msg: V2xMessage) -> MessageType:
    if isinstance(msg, Cam):
        return MessageType.CAM
    if isinstance(msg, Denm):
        return MessageType.DENM
    if isinstance(msg, Cpm):
        return MessageType.CPM
    if isinstance(msg, StubMessage):
        return msg.kind
    raise InvalidValueError(f"not a V2X message: {type(msg).__name__}")


def sender_of(msg: V2xMessage) -> StationId:
    """Station id of the originator. Stubs carry none and report 0."""
    return getattr(msg, "station_id", StationId(0))
