"""The robot's crossing-mediation state machine.

The robot waits on the sidewalk at the top border of the Zone of Danger. When a
pedestrian stops in front of it and faces it, the robot checks every vehicle it
knows about (from CAMs, its own sensors and received CPMs) for an incursion
into the zone. A hazard makes it hold the pedestrian back with a stop gesture
and warn vehicles with a DENM; it keeps re-evaluating until the hazard clears,
then cancels the DENM and lets the pedestrian cross. Once the pedestrian is
across, the interaction is recorded and the robot goes back to waiting.

Phases group into three stages of an interaction::

    pre-interaction     Waiting, IdentifyCrossingIntent
    social interaction  IdentifyHazard, ReactToHazard, Crossing
    post-interaction    PostInteraction
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple, Union

from ..core import GeoRef, KinematicState, Point, SimClock, geo_to_local, predict_position
from ..exceptions import InvalidValueError
from ..hazard import (
    DEFAULT_THRESHOLD_S,
    SAFE_DECISION,
    HazardDecision,
    HazardLevel,
    Zod,
    classify,
    contains,
    incursion_interval,
    worst_decision,
)
from ..messages.fusion import fuse_perception
from ..messages.schema import (
    VEHICLE_TYPES,
    Cam,
    Cpm,
    DenmAction,
    PerceivedObject,
    StationId,
    StationType,
    V2xMessage,
    check_station_id,
)

logger = logging.getLogger(__name__)

DEFAULT_ROBOT_STATION_ID = 1000
DEFAULT_DETECTION_RANGE_M = 2.0
DEFAULT_SENSOR_RANGE_M = 60.0
DEFAULT_PATIENCE_TICKS = 20
DEFAULT_CROSSING_TIMEOUT_TICKS = 300
DEFAULT_CAM_INTERVAL_TICKS = 10
DEFAULT_VEHICLE_STALE_TICKS = 20
DEFAULT_DENM_REPEAT_TICKS = 10

STOP_PHRASE = "stop"
CROSS_PHRASE = "You can cross"


class RobotPhase(enum.Enum):
    WAITING = "waiting"
    IDENTIFY_CROSSING_INTENT = "identify_crossing_intent"
    IDENTIFY_HAZARD = "identify_hazard"
    REACT_TO_HAZARD = "react_to_hazard"
    CROSSING = "crossing"
    POST_INTERACTION = "post_interaction"


class InteractionStage(enum.Enum):
    PRE_INTERACTION = "pre_interaction"
    SOCIAL_INTERACTION = "social_interaction"
    POST_INTERACTION = "post_interaction"


PHASE_STAGES: Dict[RobotPhase, InteractionStage] = {
    RobotPhase.WAITING: InteractionStage.PRE_INTERACTION,
    RobotPhase.IDENTIFY_CROSSING_INTENT: InteractionStage.PRE_INTERACTION,
    RobotPhase.IDENTIFY_HAZARD: InteractionStage.SOCIAL_INTERACTION,
    RobotPhase.REACT_TO_HAZARD: InteractionStage.SOCIAL_INTERACTION,
    RobotPhase.CROSSING: InteractionStage.SOCIAL_INTERACTION,
    RobotPhase.POST_INTERACTION: InteractionStage.POST_INTERACTION,
}


class GestureKind(enum.Enum):
    STOP = "stop"
    CROSS = "cross"


@dataclass(frozen=True)
class Gesture:
    kind: GestureKind


@dataclass(frozen=True)
class Say:
    text: str


@dataclass(frozen=True)
class SendDenm:
    action: DenmAction
    sequence_number: int


@dataclass(frozen=True)
class SendCam:
    pass


@dataclass(frozen=True)
class SendCpm:
    objects: Tuple[PerceivedObject, ...]


# an empty action list is the "do nothing" action
RobotAction = Union[Gesture, Say, SendDenm, SendCam, SendCpm]


@dataclass(frozen=True)
class RobotConfig:
    station_id: StationId = StationId(DEFAULT_ROBOT_STATION_ID)
    detection_range_m: float = DEFAULT_DETECTION_RANGE_M
    sensor_range_m: float = DEFAULT_SENSOR_RANGE_M
    patience_ticks: int = DEFAULT_PATIENCE_TICKS
    crossing_timeout_ticks: int = DEFAULT_CROSSING_TIMEOUT_TICKS
    cam_interval_ticks: int = DEFAULT_CAM_INTERVAL_TICKS
    vehicle_stale_ticks: int = DEFAULT_VEHICLE_STALE_TICKS
    denm_repeat_ticks: int = DEFAULT_DENM_REPEAT_TICKS

    def __post_init__(self):
        check_station_id(self.station_id)
        for name in ("detection_range_m", "sensor_range_m"):
            if not getattr(self, name) > 0:
                raise InvalidValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("patience_ticks", "crossing_timeout_ticks", "cam_interval_ticks",
                     "vehicle_stale_ticks", "denm_repeat_ticks"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise InvalidValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class TrackedVehicle:
    """A vehicle known from its CAMs, as reported at `generation_tick`."""

    state: KinematicState
    station_type: StationType
    generation_tick: int
    last_update_tick: int

    def state_at(self, clock: SimClock) -> KinematicState:
        age = (clock.tick_index - self.generation_tick) * clock.tick_duration
        return KinematicState(predict_position(self.state, age), self.state.speed, self.state.heading)


@dataclass(frozen=True)
class PedestrianDetection:
    pedestrian_id: int
    distance: float
    facing_robot: bool
    position: Point

    def __post_init__(self):
        if not self.distance >= 0:
            raise InvalidValueError(f"distance must be >= 0, got {self.distance!r}")


@dataclass(frozen=True)
class Observation:
    """Everything the robot senses during one tick.

    `perceived_objects` are the robot's own detections, positioned relative to
    the robot. `tracked_pedestrians` maps pedestrian ids to positions for the
    pedestrians the robot can currently see.
    """

    tick: int
    pedestrian_detected: Optional[PedestrianDetection] = None
    delivered_messages: Tuple[V2xMessage, ...] = ()
    perceived_objects: Tuple[PerceivedObject, ...] = ()
    tracked_pedestrians: Mapping[int, Point] = field(default_factory=dict)


@dataclass(frozen=True)
class InteractionRecord:
    pedestrian_id: int
    detected_tick: int
    permitted_tick: Optional[int]
    finished_tick: int
    denm_sequences: Tuple[int, ...]
    timed_out: bool


@dataclass(frozen=True)
class RobotState:
    zod: Zod
    threshold: float = DEFAULT_THRESHOLD_S
    config: RobotConfig = field(default_factory=RobotConfig)
    phase: RobotPhase = RobotPhase.WAITING
    phase_entered_tick: int = 0
    known_vehicles: Mapping[StationId, TrackedVehicle] = field(default_factory=dict)
    recent_cpms: Mapping[StationId, Tuple[Cpm, int]] = field(default_factory=dict)
    # fused own-sensor and CPM picture, relative to the robot
    perceived_vehicles: Tuple[PerceivedObject, ...] = ()
    active_denm: Optional[int] = None
    denm_started_tick: Optional[int] = None
    next_denm_sequence: int = 1
    target_pedestrian: Optional[int] = None
    detected_tick: Optional[int] = None
    permitted_tick: Optional[int] = None
    interaction_denms: Tuple[int, ...] = ()
    assessment: HazardDecision = SAFE_DECISION
    noncompliant_pedestrian: Optional[int] = None
    interactions: Tuple[InteractionRecord, ...] = ()

    def __post_init__(self):
        if not self.threshold > 0:
            raise InvalidValueError(f"threshold must be > 0, got {self.threshold!r}")

    @property
    def position(self) -> Point:
        return self.zod.anchor

    @property
    def stage(self) -> InteractionStage:
        return PHASE_STAGES[self.phase]


def update_tracks(state: RobotState, obs: Observation, ref: GeoRef) -> RobotState:
    """Fold delivered messages and own perception into the robot's world picture."""
    cfg = state.config
    known = dict(state.known_vehicles)
    cpms = dict(state.recent_cpms)
    for msg in obs.delivered_messages:
        if isinstance(msg, Cam):
            if msg.station_id == cfg.station_id or msg.station_type not in VEHICLE_TYPES:
                continue
            previous = known.get(msg.station_id)
            # jitter can reorder CAMs; keep the freshest report
            if previous is not None and previous.generation_tick > msg.generation_tick:
                continue
            known[msg.station_id] = TrackedVehicle(
                state=KinematicState(geo_to_local(ref, msg.latitude, msg.longitude), msg.speed, msg.heading),
                station_type=msg.station_type,
                generation_tick=msg.generation_tick,
                last_update_tick=obs.tick,
            )
        elif isinstance(msg, Cpm):
            if msg.station_id != cfg.station_id:
                cpms[msg.station_id] = (msg, obs.tick)
        # DENMs from other stations and stub families carry nothing for the robot

    horizon = cfg.vehicle_stale_ticks
    known = {k: v for k, v in known.items() if obs.tick - v.last_update_tick <= horizon}
    cpms = {k: v for k, v in cpms.items() if obs.tick - v[1] <= horizon}

    fused = fuse_perception(
        obs.perceived_objects,
        [cpms[k][0] for k in sorted(cpms)],
        state.position,
        ref,
    )
    perceived = tuple(o for o in fused if o.object_type in VEHICLE_TYPES)
    return replace(state, known_vehicles=known, recent_cpms=cpms, perceived_vehicles=perceived)


def hazard_sources(state: RobotState, clock: SimClock) -> List[KinematicState]:
    """Every vehicle the robot knows of, extrapolated to the current tick."""
    sources = [tracked.state_at(clock) for _, tracked in sorted(state.known_vehicles.items())]
    for obj in state.perceived_vehicles:
        sources.append(KinematicState(state.position + obj.rel_position, obj.speed, obj.heading))
    return sources


def assess(state: RobotState, clock: SimClock) -> HazardDecision:
    """The worst hazard over all known vehicles."""
    return worst_decision(
        classify(incursion_interval(state.zod, vehicle), state.threshold)
        for vehicle in hazard_sources(state, clock)
    )


def _enter(state: RobotState, phase: RobotPhase, tick: int, **changes) -> RobotState:
    logger.info(
        "robot %d: %s -> %s at tick %d",
        state.config.station_id, state.phase.value, phase.value, tick,
    )
    return replace(state, phase=phase, phase_entered_tick=tick, **changes)


def _permit_crossing(state: RobotState, tick: int, actions: List[RobotAction]) -> RobotState:
    actions.append(Gesture(GestureKind.CROSS))
    actions.append(Say(CROSS_PHRASE))
    return _enter(state, RobotPhase.CROSSING, tick, permitted_tick=tick)


def robot_step(
    state: RobotState,
    obs: Observation,
    clock: SimClock,
    ref: GeoRef,
) -> Tuple[RobotState, List[RobotAction]]:
    """Advance the robot by one tick."""
    tick = clock.tick_index
    if obs.tick != tick:
        raise InvalidValueError(f"observation for tick {obs.tick} stepped at tick {tick}")

    cfg = state.config
    state = update_tracks(state, obs, ref)
    state = replace(state, noncompliant_pedestrian=None)
    actions: List[RobotAction] = []
    detection = obs.pedestrian_detected

    if state.phase is RobotPhase.WAITING:
        if detection is not None and detection.distance <= cfg.detection_range_m:
            state = _enter(
                state, RobotPhase.IDENTIFY_CROSSING_INTENT, tick,
                target_pedestrian=detection.pedestrian_id,
                detected_tick=tick,
                permitted_tick=None,
                interaction_denms=(),
            )

    elif state.phase is RobotPhase.IDENTIFY_CROSSING_INTENT:
        intends_to_cross = (
            detection is not None
            and detection.pedestrian_id == state.target_pedestrian
            and detection.distance <= cfg.detection_range_m
            and detection.facing_robot
        )
        if intends_to_cross:
            state = _enter(state, RobotPhase.IDENTIFY_HAZARD, tick)
        elif tick - state.phase_entered_tick >= cfg.patience_ticks:
            state = _enter(state, RobotPhase.WAITING, tick, target_pedestrian=None, detected_tick=None)

    elif state.phase is RobotPhase.IDENTIFY_HAZARD:
        decision = assess(state, clock)
        state = replace(state, assessment=decision)
        if decision.tag is HazardLevel.SAFE:
            state = _permit_crossing(state, tick, actions)
        else:
            sequence = state.next_denm_sequence
            actions.append(Gesture(GestureKind.STOP))
            actions.append(Say(STOP_PHRASE))
            actions.append(SendDenm(DenmAction.NEW, sequence))
            state = _enter(
                state, RobotPhase.REACT_TO_HAZARD, tick,
                active_denm=sequence,
                denm_started_tick=tick,
                next_denm_sequence=sequence + 1,
                interaction_denms=state.interaction_denms + (sequence,),
            )

    elif state.phase is RobotPhase.REACT_TO_HAZARD:
        decision = assess(state, clock)
        state = replace(state, assessment=decision)
        if decision.tag is HazardLevel.SAFE:
            actions.append(SendDenm(DenmAction.TERMINATE, state.active_denm))
            state = replace(state, active_denm=None, denm_started_tick=None)
            state = _permit_crossing(state, tick, actions)
        else:
            if (tick - state.denm_started_tick) % cfg.denm_repeat_ticks == 0:
                actions.append(SendDenm(DenmAction.NEW, state.active_denm))
            position = obs.tracked_pedestrians.get(state.target_pedestrian)
            if position is not None and contains(state.zod, position):
                logger.warning(
                    "robot %d: pedestrian %d inside the zone during a %s hazard at tick %d",
                    cfg.station_id, state.target_pedestrian, decision.tag.name.lower(), tick,
                )
                actions.append(Gesture(GestureKind.STOP))
                state = replace(state, noncompliant_pedestrian=state.target_pedestrian)

    elif state.phase is RobotPhase.CROSSING:
        position = obs.tracked_pedestrians.get(state.target_pedestrian)
        crossed = position is not None and position.y < state.zod.y_min
        timed_out = tick - state.phase_entered_tick >= cfg.crossing_timeout_ticks
        if crossed or timed_out:
            record = InteractionRecord(
                pedestrian_id=state.target_pedestrian,
                detected_tick=state.detected_tick,
                permitted_tick=state.permitted_tick,
                finished_tick=tick,
                denm_sequences=state.interaction_denms,
                timed_out=not crossed,
            )
            state = _enter(
                state, RobotPhase.POST_INTERACTION, tick,
                target_pedestrian=None,
                interactions=state.interactions + (record,),
            )

    elif state.phase is RobotPhase.POST_INTERACTION:
        # outcomes are only recorded; there is no parameter update rule to apply
        state = _enter(state, RobotPhase.WAITING, tick, detected_tick=None, permitted_tick=None)

    if tick % cfg.cam_interval_ticks == 0:
        actions.append(SendCam())
        pedestrians = tuple(o for o in obs.perceived_objects if o.object_type is StationType.PEDESTRIAN)
        if pedestrians:
            actions.append(SendCpm(pedestrians))

    return state, actions
