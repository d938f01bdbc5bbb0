import pytest

from v2x_mediator.agents.robot import (
    CROSS_PHRASE,
    PHASE_STAGES,
    STOP_PHRASE,
    Gesture,
    GestureKind,
    InteractionRecord,
    InteractionStage,
    Observation,
    PedestrianDetection,
    RobotPhase,
    RobotState,
    Say,
    SendCam,
    SendCpm,
    SendDenm,
    TrackedVehicle,
    assess,
    robot_step,
)
from v2x_mediator.core import GeoRef, KinematicState, Point, SimClock
from v2x_mediator.exceptions import InvalidValueError
from v2x_mediator.hazard import HazardLevel, Zod
from v2x_mediator.messages import Cam, DenmAction, PerceivedObject, StationType

REF = GeoRef(49.0113, 8.4162)
ZOD = Zod(Point(0.0, 0.0), ll=30.0, rl=30.0, uw=0.0, lw=30.0)


def robot(**changes):
    return RobotState(zod=ZOD, **changes)


def cam(x, y, tick, speed=5.0, heading=0.0, station_id=101, station_type=StationType.CYCLIST):
    return Cam.from_kinematics(station_id, station_type, KinematicState(Point(x, y), speed, heading), REF, tick)


def facing(distance=1.5, pedestrian_id=1, facing_robot=True):
    return PedestrianDetection(pedestrian_id, distance, facing_robot, Point(0.0, distance))


def step(state, tick, detection=None, messages=(), perceived=(), tracked=None):
    obs = Observation(
        tick=tick,
        pedestrian_detected=detection,
        delivered_messages=tuple(messages),
        perceived_objects=tuple(perceived),
        tracked_pedestrians=tracked or {},
    )
    return robot_step(state, obs, SimClock(tick), REF)


def reacting(started=2):
    return robot(
        phase=RobotPhase.REACT_TO_HAZARD,
        phase_entered_tick=started,
        target_pedestrian=1,
        detected_tick=0,
        active_denm=1,
        denm_started_tick=started,
        next_denm_sequence=2,
        interaction_denms=(1,),
    )


def test_waiting_detects_pedestrian():
    state, actions = step(robot(), 1, detection=facing(1.5))
    assert state.phase is RobotPhase.IDENTIFY_CROSSING_INTENT
    assert state.target_pedestrian == 1
    assert state.detected_tick == 1
    assert actions == []


def test_waiting_ignores_distant_pedestrian():
    state, actions = step(robot(), 1, detection=facing(2.5))
    assert state.phase is RobotPhase.WAITING
    assert actions == []


def test_idle_robot_only_sends_cams():
    state = robot()
    for tick in range(1, 25):
        state, actions = step(state, tick)
        assert state.phase is RobotPhase.WAITING
        assert actions == ([SendCam()] if tick % 10 == 0 else [])


def test_facing_pedestrian_moves_to_hazard_check():
    state, _ = step(robot(), 1, detection=facing())
    state, actions = step(state, 2, detection=facing())
    assert state.phase is RobotPhase.IDENTIFY_HAZARD
    assert actions == []


def test_patience_runs_out_for_pedestrian_not_facing():
    state, _ = step(robot(), 1, detection=facing(facing_robot=False))
    for tick in range(2, 21):
        state, _ = step(state, tick, detection=facing(facing_robot=False))
        assert state.phase is RobotPhase.IDENTIFY_CROSSING_INTENT
    state, _ = step(state, 21, detection=facing(facing_robot=False))
    assert state.phase is RobotPhase.WAITING
    assert state.target_pedestrian is None


def test_hazard_holds_pedestrian_and_sends_denm():
    state = robot(phase=RobotPhase.IDENTIFY_HAZARD, target_pedestrian=1, detected_tick=0)
    state, actions = step(state, 3, messages=[cam(-50, -15, 3)])
    assert state.phase is RobotPhase.REACT_TO_HAZARD
    assert state.assessment.tag is HazardLevel.IMMINENT
    assert state.assessment.interval.t_entry == pytest.approx(4.0)
    assert state.assessment.interval.t_exit == pytest.approx(16.0)
    assert actions == [Gesture(GestureKind.STOP), Say(STOP_PHRASE), SendDenm(DenmAction.NEW, 1)]
    assert state.active_denm == 1
    assert state.next_denm_sequence == 2


def test_no_vehicles_lets_pedestrian_cross():
    state = robot(phase=RobotPhase.IDENTIFY_HAZARD, target_pedestrian=1, detected_tick=0)
    state, actions = step(state, 3)
    assert state.phase is RobotPhase.CROSSING
    assert actions == [Gesture(GestureKind.CROSS), Say(CROSS_PHRASE)]
    assert state.permitted_tick == 3
    assert state.active_denm is None


def test_far_vehicle_is_safe():
    state = robot(phase=RobotPhase.IDENTIFY_HAZARD, target_pedestrian=1, detected_tick=0)
    # 120 m out at 5 m/s: entry in 18 s
    state, actions = step(state, 3, messages=[cam(-150, -15, 3)])
    assert state.phase is RobotPhase.CROSSING
    assert Gesture(GestureKind.CROSS) in actions


def test_own_sensors_are_enough_to_see_a_hazard():
    state = robot(phase=RobotPhase.IDENTIFY_HAZARD, target_pedestrian=1, detected_tick=0)
    bike = PerceivedObject(Point(-45, -15), 5.0, 0.0, StationType.CYCLIST, 0.9)
    state, actions = step(state, 3, perceived=[bike])
    assert state.phase is RobotPhase.REACT_TO_HAZARD
    assert SendDenm(DenmAction.NEW, 1) in actions


def test_pedestrians_are_not_hazards():
    state = robot(phase=RobotPhase.IDENTIFY_HAZARD, target_pedestrian=1, detected_tick=0)
    walker = PerceivedObject(Point(-5, -15), 1.4, 0.0, StationType.PEDESTRIAN, 0.9)
    state, _ = step(state, 3, perceived=[walker])
    assert state.phase is RobotPhase.CROSSING


def test_hazard_cleared_terminates_denm():
    state, actions = step(reacting(), 30, messages=[cam(40, -15, 30)])
    assert state.phase is RobotPhase.CROSSING
    assert actions[:3] == [SendDenm(DenmAction.TERMINATE, 1), Gesture(GestureKind.CROSS), Say(CROSS_PHRASE)]
    assert state.active_denm is None


def test_react_repeats_denm_while_hazard_persists():
    state, actions = step(reacting(started=2), 7, messages=[cam(-45, -15, 7)])
    assert state.phase is RobotPhase.REACT_TO_HAZARD
    assert not any(isinstance(a, SendDenm) for a in actions)
    state, actions = step(state, 12, messages=[cam(-42, -15, 12)])
    assert state.phase is RobotPhase.REACT_TO_HAZARD
    assert SendDenm(DenmAction.NEW, 1) in actions


def test_react_stops_pedestrian_inside_zone():
    state, actions = step(reacting(), 5, messages=[cam(-45, -15, 5)], tracked={1: Point(0.2, -5.0)})
    assert state.phase is RobotPhase.REACT_TO_HAZARD
    assert actions.count(Gesture(GestureKind.STOP)) == 1
    assert state.noncompliant_pedestrian == 1

    state, actions = step(state, 6, messages=[cam(-44.5, -15, 6)], tracked={1: Point(0.2, 1.0)})
    assert Gesture(GestureKind.STOP) not in actions
    assert state.noncompliant_pedestrian is None


def test_crossing_finishes_when_pedestrian_is_across():
    state = robot(
        phase=RobotPhase.CROSSING,
        phase_entered_tick=50,
        target_pedestrian=1,
        detected_tick=3,
        permitted_tick=50,
        interaction_denms=(1,),
    )
    state, _ = step(state, 55, tracked={1: Point(0.2, -20.0)})
    assert state.phase is RobotPhase.CROSSING
    state, _ = step(state, 61, tracked={1: Point(0.2, -31.0)})
    assert state.phase is RobotPhase.POST_INTERACTION
    assert state.target_pedestrian is None
    assert state.interactions == (InteractionRecord(1, 3, 50, 61, (1,), False),)

    state, actions = step(state, 62)
    assert state.phase is RobotPhase.WAITING
    assert actions == []


def test_crossing_times_out():
    state = robot(phase=RobotPhase.CROSSING, phase_entered_tick=0, target_pedestrian=1, detected_tick=0)
    state, _ = step(state, 299)
    assert state.phase is RobotPhase.CROSSING
    state, _ = step(state, 300)
    assert state.phase is RobotPhase.POST_INTERACTION
    assert state.interactions[-1].timed_out


def test_stale_cam_is_evicted():
    state, _ = step(robot(), 1, messages=[cam(-200, -15, 1)])
    assert 101 in state.known_vehicles
    state, _ = step(state, 21)
    assert 101 in state.known_vehicles
    state, _ = step(state, 22)
    assert state.known_vehicles == {}


def test_freshest_cam_wins():
    state, _ = step(robot(), 5, messages=[cam(-40, -15, 5), cam(-45, -15, 4)])
    assert state.known_vehicles[101].generation_tick == 5
    assert state.known_vehicles[101].state.pos.x == pytest.approx(-40.0, abs=1e-6)


def test_non_vehicle_cams_are_ignored():
    messages = [
        cam(5, -15, 1, station_id=7, station_type=StationType.ROBOT),
        cam(5, -15, 1, station_id=8, station_type=StationType.ROAD_SIDE_UNIT),
    ]
    state, _ = step(robot(), 1, messages=messages)
    assert state.known_vehicles == {}


def test_known_vehicles_are_extrapolated_to_now():
    tracked = TrackedVehicle(KinematicState(Point(-50, -15), 5.0, 0.0), StationType.CYCLIST, 0, 0)
    now = tracked.state_at(SimClock(10))
    assert now.pos.x == pytest.approx(-45.0)
    state = robot(known_vehicles={101: tracked})
    decision = assess(state, SimClock(10))
    assert decision.interval.t_entry == pytest.approx(3.0)


def test_cam_cadence_includes_pedestrian_cpm():
    walker = PerceivedObject(Point(0.5, 2.0), 1.4, 4.0, StationType.PEDESTRIAN, 0.9)
    bike = PerceivedObject(Point(-45, -15), 5.0, 0.0, StationType.CYCLIST, 0.9)
    _, actions = step(robot(), 20, perceived=[walker, bike])
    assert actions == [SendCam(), SendCpm((walker,))]


def test_observation_tick_must_match_clock():
    obs = Observation(tick=4)
    with pytest.raises(InvalidValueError, match="tick"):
        robot_step(robot(), obs, SimClock(5), REF)


def test_phase_stage_table():
    assert set(PHASE_STAGES) == set(RobotPhase)
    assert PHASE_STAGES == {
        RobotPhase.WAITING: InteractionStage.PRE_INTERACTION,
        RobotPhase.IDENTIFY_CROSSING_INTENT: InteractionStage.PRE_INTERACTION,
        RobotPhase.IDENTIFY_HAZARD: InteractionStage.SOCIAL_INTERACTION,
        RobotPhase.REACT_TO_HAZARD: InteractionStage.SOCIAL_INTERACTION,
        RobotPhase.CROSSING: InteractionStage.SOCIAL_INTERACTION,
        RobotPhase.POST_INTERACTION: InteractionStage.POST_INTERACTION,
    }
    assert robot(phase=RobotPhase.REACT_TO_HAZARD).stage is InteractionStage.SOCIAL_INTERACTION
