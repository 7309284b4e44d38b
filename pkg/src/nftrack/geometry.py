"""Exact 2D geometry kernel: segment intersection, mirroring, specular points.

All operations are pure functions of immutable inputs. Coordinates are in
meters. ``EPS_GEOM`` is the global tolerance for point-on-segment and
degeneracy tests; callers may override per call.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

EPS_GEOM = 1e-9


class Point(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: Point
    b: Point


def as_point(p) -> Point:
    """Coerce a (x, y) pair into a finite Point."""
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"point coordinates must be finite, got ({x}, {y})")
    return Point(x, y)


def as_segment(s) -> Segment:
    a = as_point(s[0])
    b = as_point(s[1])
    seg = Segment(a, b)
    _check_nondegenerate(seg)
    return seg


def _check_nondegenerate(s: Segment, eps: float = EPS_GEOM) -> None:
    if math.hypot(s.b.x - s.a.x, s.b.y - s.a.y) <= eps:
        raise ValueError(f"degenerate segment {s}")


def _point_segment_distance(px: float, py: float, s: Segment) -> float:
    ax, ay = s.a
    dx = s.b.x - ax
    dy = s.b.y - ay
    l2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / l2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_on_segment(p: Point, s: Segment, eps: float = EPS_GEOM) -> bool:
    return _point_segment_distance(p.x, p.y, s) <= eps


def segment_distance(s1: Segment, s2: Segment) -> float:
    """Minimum distance between two closed segments (0 if they cross)."""
    if _proper_crossing(s1, s2):
        return 0.0
    return min(
        _point_segment_distance(s1.a.x, s1.a.y, s2),
        _point_segment_distance(s1.b.x, s1.b.y, s2),
        _point_segment_distance(s2.a.x, s2.a.y, s1),
        _point_segment_distance(s2.b.x, s2.b.y, s1),
    )


def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _proper_crossing(s1: Segment, s2: Segment) -> bool:
    d1 = _cross(s2.a.x, s2.a.y, s2.b.x, s2.b.y, s1.a.x, s1.a.y)
    d2 = _cross(s2.a.x, s2.a.y, s2.b.x, s2.b.y, s1.b.x, s1.b.y)
    d3 = _cross(s1.a.x, s1.a.y, s1.b.x, s1.b.y, s2.a.x, s2.a.y)
    d4 = _cross(s1.a.x, s1.a.y, s1.b.x, s1.b.y, s2.b.x, s2.b.y)
    return ((d1 > 0) != (d2 > 0)) and (d1 != 0) and (d2 != 0) and \
           ((d3 > 0) != (d4 > 0)) and (d3 != 0) and (d4 != 0)


def segments_intersect(s1: Segment, s2: Segment, eps: float = EPS_GEOM) -> bool:
    """Closed-segment intersection test with tolerance ``eps``.

    True iff the segments share a point, where endpoint touches and
    collinear overlaps within ``eps`` count as intersections. Collinear
    overlap counts as intersecting (a ray grazing along a wall is
    obstructed).
    """
    s1 = Segment(as_point(s1[0]), as_point(s1[1]))
    s2 = Segment(as_point(s2[0]), as_point(s2[1]))
    _check_nondegenerate(s1)
    _check_nondegenerate(s2)
    return segment_distance(s1, s2) <= eps


def mirror_point(p: Point, surface: Segment) -> Point:
    """Reflect ``p`` across the infinite line through ``surface``."""
    p = as_point(p)
    surface = Segment(as_point(surface[0]), as_point(surface[1]))
    _check_nondegenerate(surface)
    ax, ay = surface.a
    wx = surface.b.x - ax
    wy = surface.b.y - ay
    l2 = wx * wx + wy * wy
    t = ((p.x - ax) * wx + (p.y - ay) * wy) / l2
    fx = ax + t * wx
    fy = ay + t * wy
    return Point(2.0 * fx - p.x, 2.0 * fy - p.y)


def reflection_point(
    antenna: Point, ue: Point, surface: Segment, eps: float = EPS_GEOM
) -> Optional[Point]:
    """Specular bounce point on ``surface`` for the path antenna -> ue.

    Image construction: mirror ``ue`` across the surface line and intersect
    the segment antenna -> mirror with the surface. Returns the bounce point
    if it lies within the surface's finite extent (inclusive, with ``eps``
    slack); None when the crossing misses the extent or when antenna and ue
    sit on opposite sides of the surface line (the mirrored segment then
    never crosses it, so no specular path exists).
    """
    antenna = as_point(antenna)
    ue = as_point(ue)
    surface = Segment(as_point(surface[0]), as_point(surface[1]))
    _check_nondegenerate(surface)
    if antenna == ue:
        raise ValueError("antenna and ue positions coincide")
    m = mirror_point(ue, surface)
    ax, ay = surface.a
    wx = surface.b.x - ax
    wy = surface.b.y - ay
    wlen = math.hypot(wx, wy)
    rx = m.x - antenna.x
    ry = m.y - antenna.y
    den = rx * wy - ry * wx
    if abs(den) < 1e-300:
        return None  # path parallel to the surface line: no crossing
    t = ((ax - antenna.x) * wy - (ay - antenna.y) * wx) / den
    u = ((ax - antenna.x) * ry - (ay - antenna.y) * rx) / den
    if t < 0.0 or t > 1.0:
        return None
    slack = eps / wlen
    if u < -slack or u > 1.0 + slack:
        return None
    return Point(antenna.x + t * rx, antenna.y + t * ry)


def incidence_angle(antenna: Point, refl_pt: Point, surface: Segment) -> float:
    """Angle in [0, pi/2] between the ray antenna -> refl_pt and the surface normal."""
    antenna = as_point(antenna)
    refl_pt = as_point(refl_pt)
    surface = Segment(as_point(surface[0]), as_point(surface[1]))
    _check_nondegenerate(surface)
    if not point_on_segment(refl_pt, surface, 10.0 * EPS_GEOM):
        raise ValueError(f"reflection point {refl_pt} does not lie on {surface}")
    dx = refl_pt.x - antenna.x
    dy = refl_pt.y - antenna.y
    dlen = math.hypot(dx, dy)
    if dlen <= EPS_GEOM:
        raise ValueError("antenna coincides with the reflection point")
    wx = surface.b.x - surface.a.x
    wy = surface.b.y - surface.a.y
    wlen = math.hypot(wx, wy)
    # |component of the unit ray along the unit normal (-wy, wx)|
    cos_theta = abs(-dx * wy + dy * wx) / (dlen * wlen)
    if cos_theta > 1.0:
        cos_theta = 1.0
    return math.acos(cos_theta)
