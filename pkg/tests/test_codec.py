import math
import struct

import numpy as np
import pytest

from v2x_mediator.core import GeoRef, Point
from v2x_mediator.exceptions import (
    CodecError,
    InvalidValueError,
    InvariantViolationError,
    TruncatedError,
    UnknownTagError,
    VersionMismatchError,
)
from v2x_mediator.messages import (
    Cam,
    CauseCode,
    Cpm,
    Denm,
    DenmAction,
    MessageType,
    PerceivedObject,
    StationType,
    StubMessage,
    decode,
    encode,
    read_message_log,
    try_decode,
    write_message_log,
)
from v2x_mediator.messages.schema import STUB_KINDS

CAM_SIZE = 48
DENM_SIZE = 29
CPM_HEADER_SIZE = 27
OBJECT_SIZE = 41

STATION_TYPES = list(StationType)
CAUSE_CODES = list(CauseCode)
STUBS = sorted(STUB_KINDS)


def sample_cam(**changes):
    fields = dict(
        station_id=101,
        station_type=StationType.CYCLIST,
        latitude=49.0112,
        longitude=8.4155,
        speed=5.0,
        heading=0.0,
        generation_tick=42,
    )
    fields.update(changes)
    return Cam(**fields)


def random_object(rng):
    return PerceivedObject(
        rel_position=Point(*rng.uniform(-200, 200, size=2)),
        speed=float(rng.uniform(0, 40)),
        heading=float(rng.uniform(0, 2 * math.pi)),
        object_type=STATION_TYPES[rng.integers(len(STATION_TYPES))],
        confidence=float(rng.uniform(0, 1)),
    )


def random_message(rng):
    kind = rng.integers(4)
    station = int(rng.integers(0, 2**32))
    lat, lon = float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180))
    if kind == 0:
        return Cam(
            station,
            STATION_TYPES[rng.integers(len(STATION_TYPES))],
            lat,
            lon,
            float(rng.uniform(0, 60)),
            float(rng.uniform(0, 2 * math.pi)),
            int(rng.integers(0, 2**63)),
        )
    if kind == 1:
        return Denm(
            station,
            CAUSE_CODES[rng.integers(len(CAUSE_CODES))],
            lat,
            lon,
            DenmAction(int(rng.integers(2))),
            int(rng.integers(0, 2**32)),
        )
    if kind == 2:
        return Cpm(station, lat, lon, tuple(random_object(rng) for _ in range(rng.integers(0, 6))))
    return StubMessage(STUBS[rng.integers(len(STUBS))], rng.bytes(int(rng.integers(0, 64))))


def test_roundtrip_random_messages():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        msg = random_message(rng)
        data = encode(msg)
        assert decode(data) == msg
        assert encode(decode(data)) == data


def test_encoding_sizes():
    assert len(encode(sample_cam())) == CAM_SIZE
    ref = GeoRef(49.0113, 8.4162)
    denm = Denm.human_presence(1000, Point(0, 0), ref, DenmAction.NEW, 1)
    assert len(encode(denm)) == DENM_SIZE
    obj = PerceivedObject(Point(1, 2), 1.4, 0.5, StationType.PEDESTRIAN, 0.9)
    assert len(encode(Cpm(1000, 49.0, 8.4))) == CPM_HEADER_SIZE
    assert len(encode(Cpm(1000, 49.0, 8.4, (obj, obj)))) == CPM_HEADER_SIZE + 2 * OBJECT_SIZE


def test_structurally_equal_messages_encode_identically():
    assert encode(sample_cam()) == encode(sample_cam())
    assert encode(sample_cam(station_type=2)) == encode(sample_cam())


def test_golden_zero_cam(golden_dir):
    expected = bytes.fromhex((golden_dir / "cam_zero.hex").read_text().strip())
    cam = Cam(0, StationType.UNKNOWN, 0.0, 0.0, 0.0, 0.0, 0)
    assert encode(cam) == expected
    assert decode(expected) == cam


def test_golden_canonical_denm(golden_dir):
    expected = bytes.fromhex((golden_dir / "denm_canonical.hex").read_text().strip())
    denm = Denm(1000, CauseCode.HUMAN_PRESENCE_ON_THE_ROAD, 49.0, 8.5, DenmAction.NEW, 1)
    assert encode(denm) == expected
    assert decode(expected) == denm


def test_decode_unknown_tag():
    with pytest.raises(UnknownTagError) as e:
        decode(b"\x03\x00\x01")
    assert e.value.offset == 0


def test_decode_version_mismatch():
    data = bytearray(encode(sample_cam()))
    data[1:3] = struct.pack(">H", 2)
    with pytest.raises(VersionMismatchError) as e:
        decode(bytes(data))
    assert e.value.offset == 1


@pytest.mark.parametrize("cut", [0, 1, 2, 3, 10, CAM_SIZE - 1])
def test_decode_truncated(cut):
    data = encode(sample_cam())[:cut]
    with pytest.raises(TruncatedError) as e:
        decode(data)
    assert e.value.offset <= cut


def test_decode_truncated_cpm_object():
    obj = PerceivedObject(Point(1, 2), 1.4, 0.5, StationType.PEDESTRIAN, 0.9)
    data = encode(Cpm(7, 49.0, 8.4, (obj,)))
    with pytest.raises(TruncatedError) as e:
        decode(data[:-4])
    assert e.value.offset == CPM_HEADER_SIZE + OBJECT_SIZE - 8


def test_decode_rejects_trailing_bytes():
    data = encode(sample_cam())
    with pytest.raises(InvariantViolationError, match="trailing") as e:
        decode(data + b"\x00")
    assert e.value.offset == CAM_SIZE


def test_decode_rejects_invalid_field():
    data = bytearray(encode(sample_cam()))
    # speed sits after tag, version, station id, station type, lat and lon
    data[24:32] = struct.pack(">d", -1.0)
    with pytest.raises(InvariantViolationError, match="speed") as e:
        decode(bytes(data))
    assert e.value.offset == 3


def test_decode_rejects_unknown_enum_value():
    data = bytearray(encode(Denm(1, CauseCode.ACCIDENT, 0.0, 0.0, DenmAction.NEW, 1)))
    data[7] = 250
    with pytest.raises(InvariantViolationError, match="cause_code"):
        decode(bytes(data))


def test_encode_rejects_forced_invalid_message():
    cam = sample_cam()
    object.__setattr__(cam, "speed", -3.0)
    with pytest.raises(InvariantViolationError) as e:
        encode(cam)
    assert e.value.offset == 0


def test_constructors_validate():
    with pytest.raises(InvalidValueError, match="heading"):
        sample_cam(heading=7.0)
    with pytest.raises(InvalidValueError, match="station_id"):
        sample_cam(station_id=2**32)
    with pytest.raises(InvalidValueError, match="latitude"):
        sample_cam(latitude=95.0)
    with pytest.raises(InvalidValueError, match="not a stub"):
        StubMessage(MessageType.CAM, b"")
    with pytest.raises(InvalidValueError, match="confidence"):
        PerceivedObject(Point(0, 0), 1.0, 0.0, StationType.PEDESTRIAN, 1.5)


def test_fuzz_decode_returns_typed_errors():
    rng = np.random.default_rng(99)
    valid = [encode(random_message(rng)) for _ in range(50)]
    accepted = 0
    for i in range(100_000):
        if i % 2:
            data = rng.bytes(int(rng.integers(0, 64)))
        else:
            # mutate a valid message so that decoding gets past the header
            data = bytearray(valid[i % len(valid)])
            for _ in range(rng.integers(1, 4)):
                data[rng.integers(len(data))] = int(rng.integers(256))
            data = bytes(data[: rng.integers(len(data) + 1)])
        try:
            msg = decode(data)
        except CodecError as e:
            assert 0 <= e.offset <= len(data)
            continue
        accepted += 1
        assert encode(msg) == data
        assert try_decode(data) == msg
    assert accepted > 0


def test_try_decode_swallows_errors():
    assert try_decode(b"") is None
    assert try_decode(b"\xff\x00\x01") is None


def test_message_log(tmp_path):
    rng = np.random.default_rng(5)
    messages = [random_message(rng) for _ in range(20)]
    path = tmp_path / "messages.bin"
    assert write_message_log(path, (encode(m) for m in messages)) == 20
    assert read_message_log(path) == messages


def test_message_log_truncated(tmp_path):
    path = tmp_path / "messages.bin"
    write_message_log(path, [encode(sample_cam())])
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(TruncatedError):
        read_message_log(path)
