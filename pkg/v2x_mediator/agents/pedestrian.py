from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

from ..core import KinematicState, Point, SimClock
from ..exceptions import InvalidValueError
from .robot import Gesture, GestureKind, RobotAction

DEFAULT_APPROACH_SPEED_MPS = 1.4
WAIT_DISTANCE_M = 1.0
_DISTANCE_TOLERANCE_M = 1e-9
# crossing is complete this far beyond the far edge of the zone
CROSSING_OVERSHOOT_M = 1.0

# crossing runs along -y, away from the robot's sidewalk
CROSSING_HEADING = 1.5 * math.pi


class PedestrianPhase(enum.Enum):
    PENDING = "pending"
    APPROACHING = "approaching"
    WAITING = "waiting"
    CROSSING = "crossing"
    CROSSED = "crossed"


@dataclass(frozen=True)
class PedestrianScript:
    """Scripted pedestrian: walk up to the robot, wait, then cross.

    A compliant pedestrian crosses only once the robot has gestured "cross"
    (a later "stop" revokes it). A non-compliant one ignores gestures and
    crosses `noncompliant_delay_ticks` after reaching the robot.
    """

    pedestrian_id: int
    start: Point
    robot_position: Point
    crossing_target_y: float
    spawn_tick: int = 0
    approach_speed: float = DEFAULT_APPROACH_SPEED_MPS
    facing_robot: bool = True
    compliant: bool = True
    noncompliant_delay_ticks: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.approach_speed) and self.approach_speed >= 0):
            raise InvalidValueError(f"approach_speed must be >= 0, got {self.approach_speed!r}")
        if self.spawn_tick < 0:
            raise InvalidValueError(f"spawn_tick must be >= 0, got {self.spawn_tick!r}")
        if self.noncompliant_delay_ticks < 0:
            raise InvalidValueError(
                f"noncompliant_delay_ticks must be >= 0, got {self.noncompliant_delay_ticks!r}"
            )
        if not math.isfinite(self.crossing_target_y):
            raise InvalidValueError("crossing_target_y must be finite")


@dataclass(frozen=True)
class PedestrianState:
    position: Point
    phase: PedestrianPhase = PedestrianPhase.PENDING
    phase_entered_tick: int = 0
    cleared_to_cross: bool = False

    @property
    def on_scene(self) -> bool:
        return self.phase is not PedestrianPhase.PENDING


def initial_pedestrian_state(script: PedestrianScript) -> PedestrianState:
    return PedestrianState(script.start)


def pedestrian_kinematics(script: PedestrianScript, state: PedestrianState) -> KinematicState:
    """Instantaneous motion, as a sensor watching the pedestrian would report it."""
    if state.phase is PedestrianPhase.CROSSING:
        return KinematicState(state.position, script.approach_speed, CROSSING_HEADING)
    if state.phase is PedestrianPhase.APPROACHING:
        d = script.robot_position - state.position
        return KinematicState(state.position, script.approach_speed, math.atan2(d.y, d.x))
    return KinematicState(state.position, 0.0, 0.0)


def _move(state: PedestrianState, phase: PedestrianPhase, tick: int) -> PedestrianState:
    return replace(state, phase=phase, phase_entered_tick=tick)


def pedestrian_step(
    script: PedestrianScript,
    state: PedestrianState,
    robot_actions_visible: Sequence[RobotAction],
    clock: SimClock,
) -> PedestrianState:
    tick = clock.tick_index
    step = script.approach_speed * clock.tick_duration

    cleared = state.cleared_to_cross
    for action in robot_actions_visible:
        if isinstance(action, Gesture):
            cleared = action.kind is GestureKind.CROSS
    state = replace(state, cleared_to_cross=cleared)

    if state.phase is PedestrianPhase.PENDING:
        if tick < script.spawn_tick:
            return state
        state = _move(state, PedestrianPhase.APPROACHING, tick)

    if state.phase is PedestrianPhase.APPROACHING:
        gap = state.position.distance_to(script.robot_position)
        if gap > WAIT_DISTANCE_M + _DISTANCE_TOLERANCE_M:
            advance = min(step, gap - WAIT_DISTANCE_M)
            d = script.robot_position - state.position
            state = replace(state, position=Point(
                state.position.x + d.x / gap * advance,
                state.position.y + d.y / gap * advance,
            ))
            gap -= advance
        if gap <= WAIT_DISTANCE_M + _DISTANCE_TOLERANCE_M:
            state = _move(state, PedestrianPhase.WAITING, tick)

    if state.phase is PedestrianPhase.WAITING:
        if script.compliant:
            go = state.cleared_to_cross
        else:
            go = tick - state.phase_entered_tick >= script.noncompliant_delay_ticks
        if go:
            return _move(state, PedestrianPhase.CROSSING, tick)
        return state

    if state.phase is PedestrianPhase.CROSSING and state.phase_entered_tick < tick:
        y = state.position.y - step
        if y <= script.crossing_target_y:
            return _move(
                replace(state, position=Point(state.position.x, script.crossing_target_y)),
                PedestrianPhase.CROSSED,
                tick,
            )
        state = replace(state, position=Point(state.position.x, y))

    return state
