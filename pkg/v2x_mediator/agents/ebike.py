from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Mapping, Optional, Sequence, Tuple

from ..core import KinematicState, SimClock, predict_position
from ..exceptions import InvalidValueError
from ..messages.schema import (
    VEHICLE_TYPES,
    Cam,
    CauseCode,
    Denm,
    DenmAction,
    StationId,
    StationType,
    V2xMessage,
    check_station_id,
)

DISPLAY_WARNING = "Pedestrian In Front"
DEFAULT_VEHICLE_CAM_INTERVAL_TICKS = 1
DEFAULT_DENM_VALIDITY_TICKS = 30


@dataclass(frozen=True)
class EbikeScript:
    """A vehicle driving straight, with optional scripted speed changes.

    The rider's display shows a warning while a "human presence on the road"
    DENM is active. The warning never changes the vehicle's speed.
    """

    station_id: StationId
    initial: KinematicState
    station_type: StationType = StationType.CYCLIST
    # (tick, new speed) pairs
    speed_changes: Tuple[Tuple[int, float], ...] = ()
    v2x_enabled: bool = True
    cam_interval_ticks: int = DEFAULT_VEHICLE_CAM_INTERVAL_TICKS
    denm_validity_ticks: int = DEFAULT_DENM_VALIDITY_TICKS

    def __post_init__(self):
        check_station_id(self.station_id)
        if StationType(self.station_type) not in VEHICLE_TYPES:
            raise InvalidValueError(f"{self.station_type!r} is not a vehicle station type")
        for tick, speed in self.speed_changes:
            if tick < 0 or not speed >= 0:
                raise InvalidValueError(f"bad speed change ({tick!r}, {speed!r})")
        if self.cam_interval_ticks <= 0:
            raise InvalidValueError(f"cam_interval_ticks must be > 0, got {self.cam_interval_ticks!r}")
        if self.denm_validity_ticks <= 0:
            raise InvalidValueError(f"denm_validity_ticks must be > 0, got {self.denm_validity_ticks!r}")

    def sends_cam(self, tick: int) -> bool:
        return self.v2x_enabled and tick % self.cam_interval_ticks == 0


@dataclass(frozen=True)
class EbikeState:
    kinematics: KinematicState
    display_text: Optional[str] = None
    # (originating station, sequence number) -> tick of the last New
    active_warnings: Mapping[Tuple[StationId, int], int] = field(default_factory=dict)
    heard_stations: FrozenSet[StationId] = frozenset()
    # terminated keys; a New arriving for one of them later is ignored
    terminated_warnings: FrozenSet[Tuple[StationId, int]] = frozenset()


def initial_ebike_state(script: EbikeScript) -> EbikeState:
    return EbikeState(script.initial)


def ebike_step(
    script: EbikeScript,
    state: EbikeState,
    delivered: Sequence[V2xMessage],
    clock: SimClock,
) -> Tuple[EbikeState, Optional[str]]:
    tick = clock.tick_index
    warnings = dict(state.active_warnings)
    heard = set(state.heard_stations)
    terminated = set(state.terminated_warnings)

    if script.v2x_enabled:
        for msg in delivered:
            if isinstance(msg, Denm):
                key = (msg.station_id, msg.sequence_number)
                if msg.action is DenmAction.TERMINATE:
                    warnings.pop(key, None)
                    terminated.add(key)
                elif msg.cause_code is CauseCode.HUMAN_PRESENCE_ON_THE_ROAD and key not in terminated:
                    warnings[key] = tick
            elif isinstance(msg, Cam):
                heard.add(msg.station_id)

    warnings = {k: t for k, t in warnings.items() if tick - t < script.denm_validity_ticks}
    display = DISPLAY_WARNING if warnings else None

    kinematics = state.kinematics
    speed = kinematics.speed
    for change_tick, new_speed in script.speed_changes:
        if change_tick == tick:
            speed = new_speed
    moving = KinematicState(kinematics.pos, speed, kinematics.heading)
    kinematics = KinematicState(predict_position(moving, clock.tick_duration), speed, kinematics.heading)

    return EbikeState(kinematics, display, warnings, frozenset(heard), frozenset(terminated)), display
