"""Simulated V2X broadcast channel.

A broadcast reaches every station within `range_m` of the sender's position
at send time. Each receiver independently loses the message with probability
`loss_probability`; survivors arrive after `latency_ticks` plus a uniform
draw from `0..jitter_ticks`. Randomness comes from a counter-based Philox
stream keyed by (seed, sender) and indexed by (tick, receiver), so delivery
decisions do not depend on the order stations are visited.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .core import Point, SimClock
from .exceptions import InvalidValueError
from .messages.schema import MAX_STATION_ID, StationId

logger = logging.getLogger(__name__)

DEFAULT_RANGE_M = 400.0
DEFAULT_LATENCY_TICKS = 1
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ChannelConfig:
    range_m: float = DEFAULT_RANGE_M
    loss_probability: float = 0.0
    latency_ticks: int = DEFAULT_LATENCY_TICKS
    jitter_ticks: int = 0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.range_m) and self.range_m > 0):
            raise InvalidValueError(f"range_m must be > 0, got {self.range_m!r}")
        if not (0.0 <= self.loss_probability <= 1.0):
            raise InvalidValueError(f"loss_probability must lie in [0, 1], got {self.loss_probability!r}")
        if not isinstance(self.latency_ticks, int) or self.latency_ticks < 0:
            raise InvalidValueError(f"latency_ticks must be a non-negative integer, got {self.latency_ticks!r}")
        if not isinstance(self.jitter_ticks, int) or self.jitter_ticks < 0:
            raise InvalidValueError(f"jitter_ticks must be a non-negative integer, got {self.jitter_ticks!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise InvalidValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class InFlightMessage:
    payload: bytes
    sender: StationId
    sender_pos: Point
    deliver_at: int
    receiver: StationId
    send_tick: int


@dataclass(frozen=True)
class Transmission:
    """Outcome of one broadcast: per in-range receiver, either scheduled or dropped."""

    scheduled: Tuple[InFlightMessage, ...]
    dropped: Tuple[StationId, ...]


@functools.lru_cache(maxsize=1024)
def _philox(seed: int, sender: int) -> Tuple[np.random.Philox, Dict[str, Any]]:
    bit_generator = np.random.Philox(key=np.array([seed, sender], dtype=np.uint64))
    return bit_generator, bit_generator.state


def _draws(seed: int, sender: int, tick: int, receiver: int) -> Tuple[float, int]:
    """(uniform in [0, 1), raw 64-bit word) for one (sender, tick, receiver) triple."""
    bit_generator, fresh = _philox(seed, sender)
    # rewinding the cached generator gives the same words as a new one at this counter
    bit_generator.state = {
        **fresh,
        "state": {
            "counter": np.array([tick, receiver, 0, 0], dtype=np.uint64),
            "key": fresh["state"]["key"],
        },
    }
    raw = bit_generator.random_raw(2)
    return (int(raw[0]) >> 11) * 2.0**-53, int(raw[1])


def transmit(
    config: ChannelConfig,
    clock: SimClock,
    sender: StationId,
    sender_pos: Point,
    msg_bytes: bytes,
    stations: Sequence[Tuple[StationId, Point]],
) -> Transmission:
    """Broadcast `msg_bytes` and report, per in-range receiver, delivery or loss."""
    tick = clock.tick_index
    scheduled = []
    dropped = []
    for receiver, position in stations:
        if receiver == sender:
            continue
        if sender_pos.distance_to(position) > config.range_m:
            continue
        u, raw = _draws(config.seed, sender, tick, receiver)
        if u < config.loss_probability:
            dropped.append(receiver)
            continue
        delay = config.latency_ticks + raw % (config.jitter_ticks + 1)
        scheduled.append(InFlightMessage(
            payload=msg_bytes,
            sender=sender,
            sender_pos=sender_pos,
            deliver_at=tick + delay,
            receiver=receiver,
            send_tick=tick,
        ))
    if dropped:
        logger.debug("tick %d: station %d lost to %s", tick, sender, dropped)
    return Transmission(tuple(scheduled), tuple(dropped))


def broadcast(
    config: ChannelConfig,
    clock: SimClock,
    sender: StationId,
    sender_pos: Point,
    msg_bytes: bytes,
    stations: Sequence[Tuple[StationId, Point]],
) -> List[InFlightMessage]:
    return list(transmit(config, clock, sender, sender_pos, msg_bytes, stations).scheduled)


class Mailbox:
    """Messages in flight, ordered by (deliver_at, sender, insertion order)."""

    def __init__(self):
        self._heap = []
        self._counter = itertools.count()

    def __len__(self):
        return len(self._heap)

    def post(self, messages: Iterable[InFlightMessage]):
        for msg in messages:
            if not 0 <= msg.sender <= MAX_STATION_ID:
                raise InvalidValueError(f"bad sender id {msg.sender!r}")
            heapq.heappush(self._heap, (msg.deliver_at, msg.sender, next(self._counter), msg))

    def drain_due(self, tick: int) -> List[InFlightMessage]:
        due = []
        while self._heap and self._heap[0][0] <= tick:
            due.append(heapq.heappop(self._heap)[3])
        return due


def poll(clock: SimClock, mailbox: Mailbox) -> List[Tuple[StationId, bytes]]:
    """Remove and return every message due at or before the current tick."""
    return [(m.receiver, m.payload) for m in mailbox.drain_due(clock.tick_index)]
