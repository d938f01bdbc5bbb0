"""Trace records and the metrics computed from them.

A trace is a sequence of `TraceEvent`s with non-decreasing ticks, stored one
JSON object per line with keys in the order ``tick``, ``kind``, ``payload``.
Every metric in `MetricsSummary` is a fold over the events alone, so a trace
file can be re-scored without re-running the simulation.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple

from ..exceptions import TraceFormatError

logger = logging.getLogger(__name__)

PROXIMITY_VIOLATION_M = 2.0

REASON_PROXIMITY = "proximity"
REASON_NONCOMPLIANCE = "noncompliance"


class EventKind(enum.Enum):
    PHASE_CHANGE = "PhaseChange"
    ACTION = "Action"
    MSG_SENT = "MsgSent"
    MSG_DELIVERED = "MsgDelivered"
    MSG_DROPPED = "MsgDropped"
    DISPLAY_CHANGE = "DisplayChange"
    POSITION_SAMPLE = "PositionSample"
    VIOLATION = "Violation"


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    kind: EventKind
    payload: Dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"tick": self.tick, "kind": self.kind.value, "payload": self.payload},
            separators=(",", ":"),
            allow_nan=False,
        )

    @classmethod
    def from_json(cls, line: str) -> TraceEvent:
        record = json.loads(line)
        return cls(int(record["tick"]), EventKind(record["kind"]), dict(record["payload"]))


@dataclass(frozen=True)
class MetricsSummary:
    pedestrian_wait_ticks: int
    crossing_completed: bool
    denm_count: int
    denm_delivery_ratio: float
    min_ped_vehicle_distance: Optional[float]
    violations: int
    noncompliance_events: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def write_trace(path, events: Iterable[TraceEvent]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for event in events:
            f.write(event.to_json())
            f.write("\n")
            count += 1
    return count


def read_trace(path) -> List[TraceEvent]:
    events = []
    last_tick = -1
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                event = TraceEvent.from_json(line)
            except (ValueError, KeyError, TypeError) as e:
                raise TraceFormatError(f"malformed trace record: {e}", number) from None
            if event.tick < last_tick:
                raise TraceFormatError(f"tick {event.tick} follows tick {last_tick}", number)
            last_tick = event.tick
            events.append(event)
    return events


def _pedestrian_phases(events: List[TraceEvent]) -> Tuple[int, bool]:
    waiting_since: Dict[int, int] = {}
    phases: Dict[int, str] = {}
    wait = 0
    for event in events:
        if event.kind is not EventKind.PHASE_CHANGE or event.payload["agent"] != "pedestrian":
            continue
        pid, phase = event.payload["id"], event.payload["to"]
        phases[pid] = phase
        if phase == "waiting":
            waiting_since[pid] = event.tick
        elif phase == "crossing" and pid in waiting_since:
            wait += event.tick - waiting_since.pop(pid)
    last_tick = events[-1].tick if events else 0
    # still waiting when the trace ends
    wait += sum(last_tick - since for since in waiting_since.values())
    completed = bool(phases) and all(p == "crossed" for p in phases.values())
    return wait, completed


def _min_distance(events: List[TraceEvent]) -> Optional[float]:
    best = None
    tick = None
    pedestrians: List[Tuple[float, float]] = []
    vehicles: List[Tuple[float, float]] = []

    def flush():
        nonlocal best
        for px, py in pedestrians:
            for vx, vy in vehicles:
                d = ((px - vx) ** 2 + (py - vy) ** 2) ** 0.5
                if best is None or d < best:
                    best = d

    for event in events:
        if event.kind is not EventKind.POSITION_SAMPLE:
            continue
        if event.tick != tick:
            flush()
            tick, pedestrians, vehicles = event.tick, [], []
        p = event.payload
        if p["agent"] == "pedestrian":
            pedestrians.append((p["x"], p["y"]))
        elif p["agent"] == "vehicle":
            vehicles.append((p["x"], p["y"]))
    flush()
    return best


def compute_metrics(events: Iterable[TraceEvent]) -> MetricsSummary:
    events = list(events)
    wait, completed = _pedestrian_phases(events)

    denm_sequences = set()
    delivered = dropped = 0
    violations = noncompliance = 0
    for event in events:
        p = event.payload
        if event.kind is EventKind.ACTION:
            if p["action"] == "SendDenm" and p["denm_action"] == "new":
                denm_sequences.add(p["sequence_number"])
        elif event.kind is EventKind.MSG_DELIVERED:
            delivered += p["msg_type"] == "DENM"
        elif event.kind is EventKind.MSG_DROPPED:
            dropped += p["msg_type"] == "DENM"
        elif event.kind is EventKind.VIOLATION:
            if p["reason"] == REASON_PROXIMITY:
                violations += 1
            else:
                noncompliance += 1

    attempts = delivered + dropped
    return MetricsSummary(
        pedestrian_wait_ticks=wait,
        crossing_completed=completed,
        denm_count=len(denm_sequences),
        denm_delivery_ratio=delivered / attempts if attempts else 1.0,
        min_ped_vehicle_distance=_min_distance(events),
        violations=violations,
        noncompliance_events=noncompliance,
    )
