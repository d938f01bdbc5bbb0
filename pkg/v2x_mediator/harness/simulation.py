"""The deterministic tick loop.

Within one tick the simulation

1. delivers every in-flight message that is due,
2. builds the robot's observation from the start-of-tick world,
3. steps the robot, then vehicles by station id, then pedestrians by id, then
   road-side units by station id,
4. broadcasts every message generated during the tick (positions as of the
   start of the tick),
5. samples positions and checks for proximity violations.

The run ends after `duration_ticks` ticks, or as soon as every pedestrian has
crossed and the robot is back to waiting.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..agents.ebike import EbikeState, ebike_step, initial_ebike_state
from ..agents.pedestrian import (
    PedestrianPhase,
    PedestrianState,
    initial_pedestrian_state,
    pedestrian_kinematics,
    pedestrian_step,
)
from ..agents.robot import (
    Gesture,
    Observation,
    PedestrianDetection,
    RobotAction,
    RobotPhase,
    RobotState,
    Say,
    SendCam,
    SendCpm,
    SendDenm,
    robot_step,
)
from ..agents.rsu import rsu_step
from ..core import KinematicState, Point, SimClock, local_to_geo
from ..hazard import contains
from ..messages.codec import encode, try_decode, write_message_log
from ..messages.schema import (
    Cam,
    Cpm,
    Denm,
    PerceivedObject,
    StationId,
    StationType,
    V2xMessage,
    message_type,
)
from ..netsim import Mailbox, transmit
from .scenario import Scenario
from .trace import (
    PROXIMITY_VIOLATION_M,
    REASON_NONCOMPLIANCE,
    REASON_PROXIMITY,
    EventKind,
    MetricsSummary,
    TraceEvent,
    compute_metrics,
)

logger = logging.getLogger(__name__)

ROBOT_SENSOR_CONFIDENCE = 0.9

OnTick = Callable[[int, RobotState, List[RobotAction]], None]
Outgoing = Tuple[StationId, Point, V2xMessage]


def _action_payload(action: RobotAction, hazard: str) -> Dict:
    if isinstance(action, Gesture):
        payload = {"action": "Gesture", "kind": action.kind.value}
    elif isinstance(action, Say):
        payload = {"action": "Say", "text": action.text}
    elif isinstance(action, SendDenm):
        payload = {
            "action": "SendDenm",
            "denm_action": action.action.name.lower(),
            "sequence_number": action.sequence_number,
        }
    elif isinstance(action, SendCpm):
        payload = {"action": "SendCpm", "objects": len(action.objects)}
    else:
        payload = {"action": type(action).__name__}
    payload["hazard"] = hazard
    return payload


class Simulation:
    """One run of a scenario, advanced a tick at a time with `step`."""

    def __init__(self, scenario: Scenario, on_tick: Optional[OnTick] = None, keep_messages: bool = False):
        self.scenario = scenario
        self.on_tick = on_tick
        self.keep_messages = keep_messages
        self.ref = scenario.geo_ref
        self.clock = SimClock(0, scenario.tick_duration)
        self.mailbox = Mailbox()
        setup = scenario.robot
        self.robot = RobotState(zod=setup.zod, threshold=setup.threshold, config=setup.config)
        self.vehicles: Dict[StationId, EbikeState] = {
            v.station_id: initial_ebike_state(v) for v in scenario.vehicles
        }
        self.pedestrians: Dict[int, PedestrianState] = {
            p.pedestrian_id: initial_pedestrian_state(p) for p in scenario.pedestrians
        }
        self.events: List[TraceEvent] = []
        self.sent_messages: List[bytes] = []
        self.finished = False

    @property
    def robot_id(self) -> StationId:
        return self.robot.config.station_id

    def _emit(self, kind: EventKind, payload: Dict):
        self.events.append(TraceEvent(self.clock.tick_index, kind, payload))

    def _phase_change(self, agent: str, agent_id: int, before: Optional[str], after: str):
        self._emit(EventKind.PHASE_CHANGE, {"agent": agent, "id": agent_id, "from": before, "to": after})

    def _deliver(self) -> Dict[StationId, List[V2xMessage]]:
        inbox = defaultdict(list)
        for inflight in self.mailbox.drain_due(self.clock.tick_index):
            msg = try_decode(inflight.payload)
            if msg is None:
                continue
            self._emit(EventKind.MSG_DELIVERED, {
                "sender": inflight.sender,
                "receiver": inflight.receiver,
                "msg_type": message_type(msg).name,
                "sent_tick": inflight.send_tick,
            })
            inbox[inflight.receiver].append(msg)
        return inbox

    def _observe(self, delivered: Sequence[V2xMessage]) -> Observation:
        robot_pos = self.robot.position
        sensor_range = self.robot.config.sensor_range_m
        perceived = []
        for script in self.scenario.vehicles:
            k = self.vehicles[script.station_id].kinematics
            if k.pos.distance_to(robot_pos) <= sensor_range:
                perceived.append(PerceivedObject(
                    k.pos - robot_pos, k.speed, k.heading, script.station_type, ROBOT_SENSOR_CONFIDENCE
                ))

        tracked = {}
        candidates = []
        for script in self.scenario.pedestrians:
            state = self.pedestrians[script.pedestrian_id]
            if not state.on_scene:
                continue
            distance = state.position.distance_to(robot_pos)
            if distance > sensor_range:
                continue
            k = pedestrian_kinematics(script, state)
            perceived.append(PerceivedObject(
                state.position - robot_pos, k.speed, k.heading, StationType.PEDESTRIAN, ROBOT_SENSOR_CONFIDENCE
            ))
            tracked[script.pedestrian_id] = state.position
            if state.phase in (PedestrianPhase.APPROACHING, PedestrianPhase.WAITING):
                candidates.append(PedestrianDetection(
                    script.pedestrian_id, distance, script.facing_robot, state.position
                ))

        detection = None
        if candidates:
            target = [c for c in candidates if c.pedestrian_id == self.robot.target_pedestrian]
            detection = target[0] if target else min(candidates, key=lambda c: (c.distance, c.pedestrian_id))

        return Observation(
            tick=self.clock.tick_index,
            pedestrian_detected=detection,
            delivered_messages=tuple(delivered),
            perceived_objects=tuple(perceived),
            tracked_pedestrians=tracked,
        )

    def _robot_message(self, action: RobotAction) -> Optional[V2xMessage]:
        position = self.robot.position
        tick = self.clock.tick_index
        if isinstance(action, SendCam):
            return Cam.from_kinematics(
                self.robot_id, StationType.ROBOT, KinematicState(position, 0.0, 0.0), self.ref, tick
            )
        if isinstance(action, SendDenm):
            return Denm.human_presence(self.robot_id, position, self.ref, action.action, action.sequence_number)
        if isinstance(action, SendCpm):
            lat, lon = local_to_geo(self.ref, position)
            return Cpm(self.robot_id, lat, lon, action.objects)
        return None

    def _step_robot(
        self, delivered: Sequence[V2xMessage], outbox: List[Outgoing]
    ) -> Tuple[List[RobotAction], Optional[int]]:
        tick = self.clock.tick_index
        before = self.robot
        self.robot, actions = robot_step(before, self._observe(delivered), self.clock, self.ref)
        if self.robot.phase is not before.phase:
            self._phase_change("robot", self.robot_id, before.phase.value, self.robot.phase.value)

        hazard = self.robot.assessment.tag.name.lower()
        for action in actions:
            self._emit(EventKind.ACTION, _action_payload(action, hazard))
            msg = self._robot_message(action)
            if msg is not None:
                outbox.append((self.robot_id, self.robot.position, msg))

        if self.robot.noncompliant_pedestrian is not None:
            self._emit(EventKind.VIOLATION, {
                "reason": REASON_NONCOMPLIANCE,
                "pedestrian": self.robot.noncompliant_pedestrian,
                "vehicle": None,
                "distance": None,
            })
        if self.on_tick is not None:
            self.on_tick(tick, self.robot, actions)

        # gestures are addressed to the pedestrian the robot is interacting with
        audience = self.robot.target_pedestrian
        if audience is None:
            audience = before.target_pedestrian
        return (actions if audience is not None else []), audience

    def _broadcast(self, outbox: List[Outgoing], stations: List[Tuple[StationId, Point]]):
        channel = self.scenario.channel
        for sender, position, msg in outbox:
            payload = encode(msg)
            kind = message_type(msg).name
            if self.keep_messages:
                self.sent_messages.append(payload)
            self._emit(EventKind.MSG_SENT, {"sender": sender, "msg_type": kind, "size": len(payload)})
            sent = transmit(channel, self.clock, sender, position, payload, stations)
            self.mailbox.post(sent.scheduled)
            for receiver in sent.dropped:
                self._emit(EventKind.MSG_DROPPED, {"sender": sender, "receiver": receiver, "msg_type": kind})

    def _sample(self):
        robot_pos = self.robot.position
        self._emit(EventKind.POSITION_SAMPLE, {"agent": "robot", "id": self.robot_id, "x": robot_pos.x, "y": robot_pos.y})
        for sid, state in self.vehicles.items():
            pos = state.kinematics.pos
            self._emit(EventKind.POSITION_SAMPLE, {"agent": "vehicle", "id": sid, "x": pos.x, "y": pos.y})
        for pid, state in self.pedestrians.items():
            if state.on_scene:
                pos = state.position
                self._emit(EventKind.POSITION_SAMPLE, {"agent": "pedestrian", "id": pid, "x": pos.x, "y": pos.y})

    def _check_proximity(self):
        zod = self.robot.zod
        for pid, ped in self.pedestrians.items():
            if not ped.on_scene or not contains(zod, ped.position):
                continue
            for sid, vehicle in self.vehicles.items():
                pos = vehicle.kinematics.pos
                if not contains(zod, pos):
                    continue
                distance = ped.position.distance_to(pos)
                if distance < PROXIMITY_VIOLATION_M:
                    logger.warning(
                        "tick %d: pedestrian %d and vehicle %d are %.2f m apart inside the zone",
                        self.clock.tick_index, pid, sid, distance,
                    )
                    self._emit(EventKind.VIOLATION, {
                        "reason": REASON_PROXIMITY,
                        "pedestrian": pid,
                        "vehicle": sid,
                        "distance": distance,
                    })

    def _done(self) -> bool:
        return (
            bool(self.pedestrians)
            and all(p.phase is PedestrianPhase.CROSSED for p in self.pedestrians.values())
            and self.robot.phase is RobotPhase.WAITING
        )

    def step(self):
        if self.finished:
            raise RuntimeError("simulation already finished")
        scenario = self.scenario
        clock = self.clock
        tick = clock.tick_index
        if tick == 0:
            self._phase_change("robot", self.robot_id, None, self.robot.phase.value)
            for pid, state in self.pedestrians.items():
                self._phase_change("pedestrian", pid, None, state.phase.value)

        inbox = self._deliver()
        vehicles_at_start = dict(self.vehicles)
        stations = [(self.robot_id, self.robot.position)]
        stations += [
            (v.station_id, vehicles_at_start[v.station_id].kinematics.pos)
            for v in scenario.vehicles
            if v.v2x_enabled
        ]
        stations += [(r.station_id, r.position) for r in scenario.rsus]

        outbox: List[Outgoing] = []
        visible, audience = self._step_robot(inbox.get(self.robot_id, ()), outbox)

        for script in scenario.vehicles:
            before = vehicles_at_start[script.station_id]
            if script.sends_cam(tick):
                cam = Cam.from_kinematics(script.station_id, script.station_type, before.kinematics, self.ref, tick)
                outbox.append((script.station_id, before.kinematics.pos, cam))
            after, display = ebike_step(script, before, inbox.get(script.station_id, ()), clock)
            if display != before.display_text:
                self._emit(EventKind.DISPLAY_CHANGE, {"station_id": script.station_id, "text": display})
            self.vehicles[script.station_id] = after

        for script in scenario.pedestrians:
            pid = script.pedestrian_id
            before = self.pedestrians[pid]
            after = pedestrian_step(script, before, visible if pid == audience else (), clock)
            if after.phase is not before.phase:
                self._phase_change("pedestrian", pid, before.phase.value, after.phase.value)
            self.pedestrians[pid] = after

        road_users = [(v.station_type, vehicles_at_start[v.station_id].kinematics) for v in scenario.vehicles]
        for rsu in scenario.rsus:
            cpm = rsu_step(rsu, clock, road_users, self.ref)
            if cpm is not None:
                outbox.append((rsu.station_id, rsu.position, cpm))

        self._broadcast(outbox, stations)
        self._sample()
        self._check_proximity()

        done = self._done()
        self.clock = clock.advance()
        if done or self.clock.tick_index >= scenario.duration_ticks:
            self.finished = True

    def run(self) -> Tuple[List[TraceEvent], MetricsSummary]:
        while not self.finished:
            self.step()
        return self.events, compute_metrics(self.events)


def run(scenario: Scenario, on_tick: Optional[OnTick] = None, message_log=None) -> Tuple[List[TraceEvent], MetricsSummary]:
    """Simulate `scenario` from tick 0 and return its trace and metrics.

    `on_tick(tick, robot_state, robot_actions)` is called right after the robot
    steps. With `message_log`, every broadcast message is also written there
    as length-prefixed records.
    """
    sim = Simulation(scenario, on_tick=on_tick, keep_messages=message_log is not None)
    events, metrics = sim.run()
    if message_log is not None:
        write_message_log(message_log, sim.sent_messages)
    logger.info(
        "scenario %r finished at tick %d: %d events, %d violations",
        scenario.name, sim.clock.tick_index - 1, len(events), metrics.violations,
    )
    return events, metrics
