"""Planar geometry helpers and the vessel state record shared by all modules.

The world frame is a local tangent plane: x east, y north, meters.
Headings are degrees true (0 = north, clockwise positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

METERS_PER_NMI = 1852.0
KNOTS_TO_MPS = METERS_PER_NMI / 3600.0

# Equirectangular projection scale: meters per degree of latitude.
_M_PER_DEG_LAT = 111_320.0


@dataclass(frozen=True)
class VesselState:
    """Position and motion of any vessel at an instant (the simulator's common currency)."""

    x: float
    y: float
    speed: float  # m/s
    heading: float  # degrees true
    time: float  # seconds since scenario epoch


def planar_distance(ax: float, ay: float, bx: float, by: float) -> float:
    dx = ax - bx
    dy = ay - by
    return math.sqrt(dx * dx + dy * dy)


def wrap_heading(deg: float) -> float:
    """Normalize to [0, 360)."""
    h = math.fmod(deg, 360.0)
    if h < 0.0:
        h += 360.0
    return h


def heading_error(target: float, current: float) -> float:
    """Signed shortest rotation from current to target, in (-180, 180]."""
    err = math.fmod(target - current, 360.0)
    if err > 180.0:
        err -= 360.0
    elif err <= -180.0:
        err += 360.0
    return err


def heading_to_unit(deg: float) -> tuple[float, float]:
    """Unit vector (east, north) for a heading in degrees true."""
    rad = math.radians(deg)
    return math.sin(rad), math.cos(rad)


def vector_heading(dx: float, dy: float) -> float:
    """Heading in degrees true of a planar displacement (east, north)."""
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return wrap_heading(math.degrees(math.atan2(dx, dy)))


def latlon_to_planar(
    lat: float, lon: float, origin_lat: float, origin_lon: float
) -> tuple[float, float]:
    """Equirectangular projection about the scenario origin (port-scale accuracy)."""
    y = (lat - origin_lat) * _M_PER_DEG_LAT
    x = (lon - origin_lon) * _M_PER_DEG_LAT * math.cos(math.radians(origin_lat))
    return x, y


def point_in_polygon(x: float, y: float, polygon: list[tuple[float, float]]) -> bool:
    """Ray-casting containment test; boundary points count as inside."""
    n = len(polygon)
    if n < 3:
        return False
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = polygon[i]
        xj, yj = polygon[j]
        if (yi > y) != (yj > y):
            x_cross = (xj - xi) * (y - yi) / (yj - yi) + xi
            if x == x_cross:
                return True
            if x < x_cross:
                inside = not inside
        elif yi == y and xi == x:
            return True
        j = i
    return inside
