"""Fixed-layout binary codec for V2X messages.

Every message starts with a 1-byte message-type tag and a 2-byte schema
version, followed by the message fields in declaration order. Integers are
big-endian and fixed width, floats are IEEE-754 binary64, lists carry a 4-byte
element count and opaque payloads a 4-byte byte count.

    CAM   tag | ver | station_id u32 | station_type u8 | lat f64 | lon f64
              | speed f64 | heading f64 | generation_tick u64
    DENM  tag | ver | station_id u32 | cause_code u8 | lat f64 | lon f64
              | action u8 | sequence_number u32
    CPM   tag | ver | station_id u32 | lat f64 | lon f64 | count u32
              | count * (x f64 | y f64 | speed f64 | heading f64 | type u8 | confidence f64)
    stub  tag | ver | length u32 | payload
"""

from __future__ import annotations

import logging
import struct
from typing import Callable, Iterable, Iterator, List, Optional, Tuple

from ..core import Point
from ..exceptions import (
    InvalidValueError,
    InvariantViolationError,
    TruncatedError,
    UnknownTagError,
    VersionMismatchError,
)
from .schema import (
    SCHEMA_VERSION,
    STUB_KINDS,
    Cam,
    Cpm,
    Denm,
    MessageType,
    PerceivedObject,
    StubMessage,
    V2xMessage,
    message_type,
)

logger = logging.getLogger(__name__)

HEADER = struct.Struct(">BH")
U8 = struct.Struct(">B")
U16 = struct.Struct(">H")
U32 = struct.Struct(">I")
U64 = struct.Struct(">Q")
F64 = struct.Struct(">d")

# (field name, wire format) in declaration order
CAM_LAYOUT = (
    ("station_id", U32),
    ("station_type", U8),
    ("latitude", F64),
    ("longitude", F64),
    ("speed", F64),
    ("heading", F64),
    ("generation_tick", U64),
)
DENM_LAYOUT = (
    ("station_id", U32),
    ("cause_code", U8),
    ("event_latitude", F64),
    ("event_longitude", F64),
    ("action", U8),
    ("sequence_number", U32),
)
CPM_HEADER_LAYOUT = (
    ("station_id", U32),
    ("origin_latitude", F64),
    ("origin_longitude", F64),
)
OBJECT_LAYOUT = (
    ("x", F64),
    ("y", F64),
    ("speed", F64),
    ("heading", F64),
    ("object_type", U8),
    ("confidence", F64),
)


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.offset = 0

    def take(self, fmt: struct.Struct):
        if self.offset + fmt.size > len(self.data):
            raise TruncatedError(
                f"need {fmt.size} bytes, {len(self.data) - self.offset} left", self.offset
            )
        (value,) = fmt.unpack_from(self.data, self.offset)
        self.offset += fmt.size
        return value

    def take_bytes(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise TruncatedError(
                f"need {n} payload bytes, {len(self.data) - self.offset} left", self.offset
            )
        chunk = bytes(self.data[self.offset:self.offset + n])
        self.offset += n
        return chunk

    def take_fields(self, layout) -> dict:
        return {name: self.take(fmt) for name, fmt in layout}


def _build(factory: Callable, offset: int, **fields):
    try:
        return factory(**fields)
    except InvalidValueError as e:
        raise InvariantViolationError(str(e), offset) from None


def _pack_fields(layout, values: dict) -> bytes:
    try:
        return b"".join(fmt.pack(values[name]) for name, fmt in layout)
    except struct.error as e:
        raise InvariantViolationError(f"field does not fit its wire width: {e}", 0) from None


def encode(msg: V2xMessage) -> bytes:
    """Serialize a message. Structurally equal messages give identical bytes."""
    kind = message_type(msg)
    # constructor checks again; frozen fields can still be forced with object.__setattr__
    try:
        type(msg)(**{f: getattr(msg, f) for f in msg.__dataclass_fields__})
    except InvalidValueError as e:
        raise InvariantViolationError(str(e), 0) from None

    out = [HEADER.pack(int(kind), SCHEMA_VERSION)]
    if isinstance(msg, Cam):
        out.append(_pack_fields(CAM_LAYOUT, vars(msg)))
    elif isinstance(msg, Denm):
        out.append(_pack_fields(DENM_LAYOUT, vars(msg)))
    elif isinstance(msg, Cpm):
        out.append(_pack_fields(CPM_HEADER_LAYOUT, vars(msg)))
        out.append(U32.pack(len(msg.objects)))
        for obj in msg.objects:
            out.append(_pack_fields(OBJECT_LAYOUT, {
                "x": obj.rel_position.x,
                "y": obj.rel_position.y,
                "speed": obj.speed,
                "heading": obj.heading,
                "object_type": obj.object_type,
                "confidence": obj.confidence,
            }))
    else:
        out.append(U32.pack(len(msg.payload)))
        out.append(msg.payload)
    return b"".join(out)


def decode(data: bytes) -> V2xMessage:
    """Parse one message occupying all of `data`.

    Raises
    ------
    UnknownTagError, VersionMismatchError, TruncatedError, InvariantViolationError
        Each carries the byte offset where decoding failed.
    """
    reader = _Reader(data)
    tag = reader.take(U8)
    try:
        kind = MessageType(tag)
    except ValueError:
        raise UnknownTagError(f"unknown message tag {tag}", 0) from None
    version = reader.take(U16)
    if version != SCHEMA_VERSION:
        raise VersionMismatchError(
            f"schema version {version}, expected {SCHEMA_VERSION}", 1
        )

    body_offset = reader.offset
    if kind is MessageType.CAM:
        msg = _build(Cam, body_offset, **reader.take_fields(CAM_LAYOUT))
    elif kind is MessageType.DENM:
        msg = _build(Denm, body_offset, **reader.take_fields(DENM_LAYOUT))
    elif kind is MessageType.CPM:
        header = reader.take_fields(CPM_HEADER_LAYOUT)
        count = reader.take(U32)
        objects = []
        for _ in range(count):
            object_offset = reader.offset
            fields = reader.take_fields(OBJECT_LAYOUT)
            x, y = fields.pop("x"), fields.pop("y")
            try:
                position = Point(x, y)
            except InvalidValueError as e:
                raise InvariantViolationError(str(e), object_offset) from None
            objects.append(_build(PerceivedObject, object_offset, rel_position=position, **fields))
        msg = _build(Cpm, body_offset, objects=tuple(objects), **header)
    else:
        assert kind in STUB_KINDS
        length = reader.take(U32)
        msg = StubMessage(kind, reader.take_bytes(length))

    if reader.offset != len(reader.data):
        raise InvariantViolationError(
            f"{len(reader.data) - reader.offset} trailing bytes after {kind.name}", reader.offset
        )
    return msg


def try_decode(data: bytes) -> Optional[V2xMessage]:
    """`decode`, returning None instead of raising on malformed input."""
    try:
        return decode(data)
    except (UnknownTagError, VersionMismatchError, TruncatedError, InvariantViolationError) as e:
        logger.debug("dropping undecodable message: %s", e)
        return None


def iter_records(data: bytes) -> Iterator[Tuple[int, bytes]]:
    """Split a message log into (offset, record bytes) pairs."""
    reader = _Reader(data)
    while reader.offset < len(reader.data):
        start = reader.offset
        length = reader.take(U32)
        yield start, reader.take_bytes(length)


def write_message_log(path, messages: Iterable[bytes]) -> int:
    """Write already-encoded messages as length-prefixed records. Returns the record count."""
    count = 0
    with open(path, "wb") as f:
        for payload in messages:
            f.write(U32.pack(len(payload)))
            f.write(payload)
            count += 1
    return count


def read_message_log(path) -> List[V2xMessage]:
    with open(path, "rb") as f:
        data = f.read()
    return [decode(record) for _, record in iter_records(data)]
