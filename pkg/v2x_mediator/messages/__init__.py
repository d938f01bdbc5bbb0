from .schema import (
    SCHEMA_VERSION,
    VEHICLE_TYPES,
    Cam,
    CauseCode,
    Cpm,
    Denm,
    DenmAction,
    MessageType,
    PerceivedObject,
    StationId,
    StationType,
    StubMessage,
    V2xMessage,
    message_type,
    sender_of,
)

from .codec import (
    decode,
    encode,
    read_message_log,
    try_decode,
    write_message_log,
)

from .fusion import MERGE_RADIUS_M, fuse_perception


__all__ = [
    "SCHEMA_VERSION",
    "VEHICLE_TYPES",
    "Cam",
    "CauseCode",
    "Cpm",
    "Denm",
    "DenmAction",
    "MessageType",
    "PerceivedObject",
    "StationId",
    "StationType",
    "StubMessage",
    "V2xMessage",
    "message_type",
    "sender_of",
    "decode",
    "encode",
    "read_message_log",
    "try_decode",
    "write_message_log",
    "MERGE_RADIUS_M",
    "fuse_perception",
]
