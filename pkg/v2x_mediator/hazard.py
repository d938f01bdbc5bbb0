"""Zone of Danger geometry and vehicle incursion prediction.

The Zone of Danger (ZOD) is an axis-aligned rectangle anchored at the robot::

    { (x, y) : x_r - ll <= x <= x_r + rl,  y_r - lw <= y <= y_r + uw }

A vehicle is extrapolated along a straight line and the set of times it spends
inside the rectangle is found with the slab method: each axis yields an
interval of times during which that coordinate is within bounds, and the
incursion interval is their intersection. All times are seconds relative to
the evaluation instant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import KinematicState, Point
from .exceptions import InvalidValueError

DEFAULT_THRESHOLD_S = 5.0


@dataclass(frozen=True)
class Zod:
    anchor: Point
    ll: float
    rl: float
    uw: float
    lw: float

    def __post_init__(self):
        for name in ("ll", "rl", "uw", "lw"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidValueError(f"zod.{name} must be finite and >= 0, got {value!r}")
        if self.ll + self.rl <= 0:
            raise InvalidValueError("zod must have positive length (ll + rl > 0)")
        if self.uw + self.lw <= 0:
            raise InvalidValueError("zod must have positive width (uw + lw > 0)")

    @property
    def x_min(self) -> float:
        return self.anchor.x - self.ll

    @property
    def x_max(self) -> float:
        return self.anchor.x + self.rl

    @property
    def y_min(self) -> float:
        return self.anchor.y - self.lw

    @property
    def y_max(self) -> float:
        return self.anchor.y + self.uw


class IntervalKind(enum.Enum):
    EMPTY = "empty"
    BOUNDED = "bounded"
    ALWAYS_INSIDE = "always_inside"


@dataclass(frozen=True)
class TimeInterval:
    kind: IntervalKind
    t_entry: Optional[float] = None
    t_exit: Optional[float] = None

    def __post_init__(self):
        if self.kind is IntervalKind.BOUNDED:
            if self.t_entry is None or self.t_exit is None or not self.t_entry <= self.t_exit:
                raise InvalidValueError(
                    f"bounded interval needs t_entry <= t_exit, got ({self.t_entry!r}, {self.t_exit!r})"
                )
        elif self.t_entry is not None or self.t_exit is not None:
            raise InvalidValueError(f"{self.kind.value} interval carries no endpoints")

    @classmethod
    def empty(cls) -> TimeInterval:
        return cls(IntervalKind.EMPTY)

    @classmethod
    def bounded(cls, t_entry: float, t_exit: float) -> TimeInterval:
        return cls(IntervalKind.BOUNDED, t_entry, t_exit)

    @classmethod
    def always_inside(cls) -> TimeInterval:
        return cls(IntervalKind.ALWAYS_INSIDE)

    @property
    def is_empty(self) -> bool:
        return self.kind is IntervalKind.EMPTY

    def covers(self, t: float) -> bool:
        if self.kind is IntervalKind.EMPTY:
            return False
        if self.kind is IntervalKind.ALWAYS_INSIDE:
            return True
        return self.t_entry <= t <= self.t_exit


class HazardLevel(enum.IntEnum):
    SAFE = 0
    IMMINENT = 1
    ACTIVE = 2


@dataclass(frozen=True)
class HazardDecision:
    tag: HazardLevel
    interval: TimeInterval


SAFE_DECISION = HazardDecision(HazardLevel.SAFE, TimeInterval.empty())


def contains(zod: Zod, p: Point) -> bool:
    """Boundary-inclusive membership test."""
    return zod.x_min <= p.x <= zod.x_max and zod.y_min <= p.y <= zod.y_max


def incursion_interval(zod: Zod, state: KinematicState) -> TimeInterval:
    """Times at which the straight-line extrapolation of `state` lies inside `zod`.

    A vehicle already inside reports a negative `t_entry`. An incursion that
    ended in the past (`t_exit < 0`) is reported as empty.
    """
    vx, vy = state.velocity()
    lo, hi = -math.inf, math.inf
    for p, v, bound_min, bound_max in (
        (state.pos.x, vx, zod.x_min, zod.x_max),
        (state.pos.y, vy, zod.y_min, zod.y_max),
    ):
        if v == 0.0:
            if not bound_min <= p <= bound_max:
                return TimeInterval.empty()
            continue
        t0 = (bound_min - p) / v
        t1 = (bound_max - p) / v
        if t0 > t1:
            t0, t1 = t1, t0
        lo = max(lo, t0)
        hi = min(hi, t1)

    if lo > hi:
        return TimeInterval.empty()
    if math.isinf(lo) and math.isinf(hi):
        if state.speed == 0:
            return TimeInterval.always_inside()
        # moving too slowly to leave within any finite horizon
        return TimeInterval.bounded(-math.inf, math.inf)
    if hi < 0:
        return TimeInterval.empty()
    return TimeInterval.bounded(lo, hi)


def classify(interval: TimeInterval, threshold: float = DEFAULT_THRESHOLD_S) -> HazardDecision:
    """Grade an incursion interval against the time-to-entry threshold."""
    if not (threshold > 0 and math.isfinite(threshold)):
        raise InvalidValueError(f"threshold must be > 0, got {threshold!r}")

    if interval.kind is IntervalKind.EMPTY:
        return HazardDecision(HazardLevel.SAFE, interval)
    if interval.kind is IntervalKind.ALWAYS_INSIDE:
        return HazardDecision(HazardLevel.ACTIVE, interval)

    if interval.t_entry <= 0 <= interval.t_exit:
        return HazardDecision(HazardLevel.ACTIVE, interval)
    if 0 < interval.t_entry < threshold:
        return HazardDecision(HazardLevel.IMMINENT, interval)
    return HazardDecision(HazardLevel.SAFE, interval)


def _entry_key(interval: TimeInterval) -> float:
    if interval.kind is IntervalKind.BOUNDED:
        return interval.t_entry
    if interval.kind is IntervalKind.ALWAYS_INSIDE:
        return -math.inf
    return math.inf


def worst_decision(decisions: Iterable[HazardDecision]) -> HazardDecision:
    """Most severe decision; the earliest entry breaks ties between equal levels.

    An empty interval counts as never entering. `SAFE_DECISION` is returned
    only when there is nothing to compare.
    """
    worst = None
    for decision in decisions:
        if (
            worst is None
            or decision.tag > worst.tag
            or (decision.tag == worst.tag and _entry_key(decision.interval) < _entry_key(worst.interval))
        ):
            worst = decision
    return SAFE_DECISION if worst is None else worst
