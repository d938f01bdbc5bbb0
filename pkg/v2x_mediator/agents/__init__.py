from .ebike import (
    DISPLAY_WARNING,
    EbikeScript,
    EbikeState,
    ebike_step,
    initial_ebike_state,
)
from .pedestrian import (
    PedestrianPhase,
    PedestrianScript,
    PedestrianState,
    initial_pedestrian_state,
    pedestrian_kinematics,
    pedestrian_step,
)
from .robot import (
    CROSS_PHRASE,
    PHASE_STAGES,
    STOP_PHRASE,
    Gesture,
    GestureKind,
    InteractionRecord,
    InteractionStage,
    Observation,
    PedestrianDetection,
    RobotAction,
    RobotConfig,
    RobotPhase,
    RobotState,
    Say,
    SendCam,
    SendCpm,
    SendDenm,
    TrackedVehicle,
    assess,
    hazard_sources,
    robot_step,
    update_tracks,
)
from .rsu import RsuScript, rsu_step

__all__ = [
    "DISPLAY_WARNING",
    "EbikeScript",
    "EbikeState",
    "ebike_step",
    "initial_ebike_state",
    "PedestrianPhase",
    "PedestrianScript",
    "PedestrianState",
    "initial_pedestrian_state",
    "pedestrian_kinematics",
    "pedestrian_step",
    "CROSS_PHRASE",
    "PHASE_STAGES",
    "STOP_PHRASE",
    "Gesture",
    "GestureKind",
    "InteractionRecord",
    "InteractionStage",
    "Observation",
    "PedestrianDetection",
    "RobotAction",
    "RobotConfig",
    "RobotPhase",
    "RobotState",
    "Say",
    "SendCam",
    "SendCpm",
    "SendDenm",
    "TrackedVehicle",
    "assess",
    "hazard_sources",
    "robot_step",
    "update_tracks",
    "RsuScript",
    "rsu_step",
]
