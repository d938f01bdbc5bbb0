"""Planar geometry, kinematics and the simulation time base.

All positions live in a local east/north frame measured in meters. Headings
use the mathematical convention: 0 points east (+x) and angles grow
counterclockwise, in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import GeoBoundsError, InvalidValueError

TAU = 2.0 * math.pi
EARTH_RADIUS_M = 6_371_000.0
DEFAULT_TICK_DURATION_S = 0.1

# below this a velocity component is exactly zero (cos(pi/2) is ~6e-17, not 0)
VELOCITY_EPSILON = 1e-12


def normalize_heading(heading: float) -> float:
    """Map any finite angle onto [0, 2π)."""
    if not math.isfinite(heading):
        raise InvalidValueError(f"heading must be finite, got {heading!r}")
    h = heading % TAU
    # a tiny negative input rounds up to exactly TAU
    return 0.0 if h >= TAU else h


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidValueError(f"point coordinates must be finite, got ({self.x!r}, {self.y!r})")

    def distance_to(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def __add__(self, other: Point) -> Point:
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Point) -> Point:
        return Point(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class KinematicState:
    """Position, speed (m/s) and heading (rad) of a road user moving in a straight line."""

    pos: Point
    speed: float
    heading: float

    def __post_init__(self):
        if not math.isfinite(self.speed) or self.speed < 0:
            raise InvalidValueError(f"speed must be finite and >= 0, got {self.speed!r}")
        object.__setattr__(self, "heading", normalize_heading(self.heading))

    def velocity(self) -> Tuple[float, float]:
        vx = self.speed * math.cos(self.heading)
        vy = self.speed * math.sin(self.heading)
        if abs(vx) < VELOCITY_EPSILON:
            vx = 0.0
        if abs(vy) < VELOCITY_EPSILON:
            vy = 0.0
        return vx, vy


@dataclass(frozen=True)
class SimClock:
    tick_index: int = 0
    tick_duration: float = DEFAULT_TICK_DURATION_S

    def __post_init__(self):
        if self.tick_index < 0:
            raise InvalidValueError(f"tick_index must be >= 0, got {self.tick_index}")
        if not (self.tick_duration > 0 and math.isfinite(self.tick_duration)):
            raise InvalidValueError(f"tick_duration must be > 0, got {self.tick_duration!r}")

    @property
    def time(self) -> float:
        return self.tick_index * self.tick_duration

    def advance(self) -> SimClock:
        return SimClock(self.tick_index + 1, self.tick_duration)


@dataclass(frozen=True)
class GeoRef:
    """WGS84 origin of the local frame."""

    origin_lat: float
    origin_lon: float

    def __post_init__(self):
        _check_wgs84(self.origin_lat, self.origin_lon)


def _check_wgs84(lat: float, lon: float):
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise GeoBoundsError(f"latitude must lie in [-90, 90], got {lat!r}")
    if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
        raise GeoBoundsError(f"longitude must lie in [-180, 180], got {lon!r}")


def predict_position(state: KinematicState, t: float) -> Point:
    """Extrapolate `state` by `t` seconds at constant speed and heading.

    `t` may be negative, which walks the trajectory backwards.
    """
    vx, vy = state.velocity()
    return Point(state.pos.x + vx * t, state.pos.y + vy * t)


def predict_positions(state: KinematicState, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized `predict_position` over an array of times."""
    vx, vy = state.velocity()
    times = np.asarray(times, dtype=np.float64)
    return state.pos.x + vx * times, state.pos.y + vy * times


def geo_to_local(ref: GeoRef, lat: float, lon: float) -> Point:
    """Equirectangular projection of (lat, lon) around `ref`, in meters."""
    _check_wgs84(lat, lon)
    ref_lat = math.radians(ref.origin_lat)
    x = EARTH_RADIUS_M * math.radians(lon - ref.origin_lon) * math.cos(ref_lat)
    y = EARTH_RADIUS_M * math.radians(lat - ref.origin_lat)
    return Point(x, y)


def local_to_geo(ref: GeoRef, p: Point) -> Tuple[float, float]:
    """Inverse of `geo_to_local`. Returns (lat, lon) in degrees."""
    ref_lat = math.radians(ref.origin_lat)
    lat = ref.origin_lat + math.degrees(p.y / EARTH_RADIUS_M)
    lon = ref.origin_lon + math.degrees(p.x / (EARTH_RADIUS_M * math.cos(ref_lat)))
    _check_wgs84(lat, lon)
    return lat, lon
