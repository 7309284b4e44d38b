"""Per-element path tracing and near-field channel construction.

For every antenna element the direct path and one single-bounce path per
surface are tested individually, so a surface can block or reflect the
signal for only a subset of elements. The same routine evaluates both the
true channel (full surface list) and the predicted channel (known subset):
identical code path, identical numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import (
    EPS_GEOM,
    Point,
    Segment,
    _point_segment_distance,
    as_point,
    as_segment,
    incidence_angle,
    reflection_point,
)
from .signal import OfdmConfig


@dataclass(frozen=True)
class ConstantBeta:
    """Angle-independent reflection coefficient."""

    beta: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class Fresnel:
    """Fresnel reflection for a dielectric half-space, TE polarization."""

    eps_r: float

    def __post_init__(self):
        if self.eps_r < 1.0:
            raise ValueError(f"eps_r must be >= 1, got {self.eps_r}")


ReflectModel = Union[ConstantBeta, Fresnel]


@dataclass(frozen=True)
class Surface:
    id: int
    geom: Segment
    reflect_model: ReflectModel = ConstantBeta(1.0)

    def __post_init__(self):
        object.__setattr__(self, "geom", as_segment(self.geom))


@dataclass(frozen=True)
class Environment:
    surfaces: tuple[Surface, ...]

    def __post_init__(self):
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        ids = [s.id for s in self.surfaces]
        if sorted(ids) != list(range(len(ids))):
            raise ValueError(f"surface ids must be unique 0..S-1, got {ids}")

    @property
    def n_surfaces(self) -> int:
        return len(self.surfaces)


@dataclass(frozen=True)
class AwarenessSet:
    """Sorted subset of surface ids known to the tracking side."""

    known_ids: tuple[int, ...]

    def __post_init__(self):
        ids = tuple(sorted(int(i) for i in self.known_ids))
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate ids in awareness set: {ids}")
        object.__setattr__(self, "known_ids", ids)

    def surfaces_of(self, env: Environment) -> tuple[Surface, ...]:
        valid = {s.id for s in env.surfaces}
        missing = [i for i in self.known_ids if i not in valid]
        if missing:
            raise ValueError(f"awareness ids {missing} not in environment")
        return tuple(s for s in env.surfaces if s.id in set(self.known_ids))


@dataclass(frozen=True)
class ArrayGeometry:
    elements: tuple[Point, ...]

    def __post_init__(self):
        pts = tuple(as_point(p) for p in self.elements)
        if len(pts) < 1:
            raise ValueError("array needs at least one element")
        if len(set(pts)) != len(pts):
            raise ValueError("element positions must be distinct")
        object.__setattr__(self, "elements", pts)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def centroid(self) -> Point:
        xs = [p.x for p in self.elements]
        ys = [p.y for p in self.elements]
        return Point(sum(xs) / len(xs), sum(ys) / len(ys))

    def as_array(self) -> np.ndarray:
        return np.array(self.elements, dtype=np.float64)


def uniform_linear_array(
    n_elements: int, spacing: float, origin: Point = Point(0.0, 0.0), orientation: float = 0.0
) -> ArrayGeometry:
    """ULA centered at ``origin`` along direction ``orientation`` (radians)."""
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    origin = as_point(origin)
    ux, uy = math.cos(orientation), math.sin(orientation)
    pts = []
    for i in range(n_elements):
        off = (i - (n_elements - 1) / 2.0) * spacing
        pts.append(Point(origin.x + off * ux, origin.y + off * uy))
    return ArrayGeometry(tuple(pts))


@dataclass(frozen=True)
class PathRecord:
    kind: str  # "los" | "nlos"
    surface_id: Optional[int]
    refl_pt: Optional[Point]
    distance: float
    beta_per_subcarrier: tuple[float, ...]

    def __post_init__(self):
        if self.kind == "los":
            if self.refl_pt is not None or self.surface_id is not None:
                raise ValueError("LOS record carries no reflection data")
            if any(b != 1.0 for b in self.beta_per_subcarrier):
                raise ValueError("LOS beta must be 1 on every subcarrier")
        elif self.kind == "nlos":
            if self.refl_pt is None or self.surface_id is None:
                raise ValueError("NLOS record requires a reflection point and surface id")
        else:
            raise ValueError(f"unknown path kind {self.kind!r}")


@dataclass(frozen=True)
class PathSet:
    per_element: tuple[tuple[PathRecord, ...], ...]

    def any_path(self) -> bool:
        return any(len(paths) > 0 for paths in self.per_element)


class CheckCounter:
    """Counts surface-versus-path occlusion queries (test instrumentation)."""

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


intersection_checks = CheckCounter()


def _touch_params(leg: Segment, wall: Segment, eps: float) -> list[float]:
    """Leg parameters (in [0,1]) where the leg passes within eps of the wall."""
    ax, ay = leg.a
    dx = leg.b.x - ax
    dy = leg.b.y - ay
    l2 = dx * dx + dy * dy
    params = []
    for t in (0.0, 1.0):
        if _point_segment_distance(ax + t * dx, ay + t * dy, wall) <= eps:
            params.append(t)
    for w in (wall.a, wall.b):
        t = ((w.x - ax) * dx + (w.y - ay) * dy) / l2
        t = min(max(t, 0.0), 1.0)
        if _point_segment_distance(ax + t * dx, ay + t * dy, wall) <= eps:
            params.append(t)
    return params


def _wall_blocks_leg(
    leg: Segment, wall: Segment, eps: float, skip_start: bool, skip_end: bool
) -> bool:
    """Occlusion of a path leg by a wall, ignoring contact at excluded anchors.

    A contact is ignored when it lies within ``eps`` (meters) of the leg start
    (``skip_start``) or end (``skip_end``); those anchors are the path's own
    end points, which by convention do not self-block.
    """
    ax, ay = leg.a
    wall_ax, wall_ay = wall.a
    wall_bx, wall_by = wall.b
    # cheap reject: separated bounding boxes cannot come within eps
    if min(ax, leg.b.x) > max(wall_ax, wall_bx) + eps or max(ax, leg.b.x) < min(wall_ax, wall_bx) - eps:
        return False
    if min(ay, leg.b.y) > max(wall_ay, wall_by) + eps or max(ay, leg.b.y) < min(wall_ay, wall_by) - eps:
        return False
    dx = leg.b.x - ax
    dy = leg.b.y - ay
    leg_len = math.hypot(dx, dy)
    wx, wy = wall.a
    sx = wall.b.x - wx
    sy = wall.b.y - wy
    den = dx * sy - dy * sx
    lo = eps / leg_len if skip_start else 0.0
    hi = 1.0 - eps / leg_len if skip_end else 1.0
    if den != 0.0:
        t = ((wx - ax) * sy - (wy - ay) * sx) / den
        u = ((wx - ax) * dy - (wy - ay) * dx) / den
        if 0.0 < t < 1.0 and 0.0 < u < 1.0:
            return lo <= t <= hi
    # no proper crossing: near-touch / graze / collinear overlap
    params = _touch_params(leg, wall, eps)
    if not params:
        return False
    return max(params) >= lo and min(params) <= hi


def los_indicator(element: Point, p: Point, surfaces: Sequence[Surface]) -> int:
    """1 iff the segment element -> p crosses no surface in the list.

    Contacts within EPS_GEOM of either end point are ignored, so a terminal
    standing exactly on a surface is not shadowed by it.
    """
    element = as_point(element)
    p = as_point(p)
    leg = Segment(element, p)
    for s in surfaces:
        intersection_checks.count += 1
        if _wall_blocks_leg(leg, s.geom, EPS_GEOM, True, True):
            return 0
    return 1


def nlos_indicator(
    element: Point, surface: Surface, p: Point, surfaces: Sequence[Surface]
) -> int:
    """1 iff a valid single-bounce path element -> surface -> p exists.

    Valid means the specular point lies within the surface extent and neither
    leg is occluded by any other surface in the list. The reflecting surface
    never blocks its own bounce; a different surface touching the path at the
    bounce point does.
    """
    element = as_point(element)
    p = as_point(p)
    intersection_checks.count += 1
    r = reflection_point(element, p, surface.geom, EPS_GEOM)
    if r is None:
        return 0
    if (
        math.hypot(r.x - element.x, r.y - element.y) <= EPS_GEOM
        or math.hypot(r.x - p.x, r.y - p.y) <= EPS_GEOM
    ):
        return 0  # terminal sits on the surface: bounce degenerates into the direct path
    incident = Segment(element, r)
    reflected = Segment(r, p)
    for other in surfaces:
        if other.id == surface.id:
            continue
        intersection_checks.count += 1
        if _wall_blocks_leg(incident, other.geom, EPS_GEOM, True, False):
            return 0
        if _wall_blocks_leg(reflected, other.geom, EPS_GEOM, False, True):
            return 0
    return 1


def reflection_coefficient(model: ReflectModel, theta_i: float) -> float:
    """Amplitude reflection coefficient at incidence angle theta_i (radians)."""
    if isinstance(model, ConstantBeta):
        return model.beta
    c = math.cos(theta_i)
    s = math.sqrt(max(model.eps_r - 1.0 + c * c, 0.0))
    if c + s == 0.0:
        return 1.0  # grazing limit
    b = abs((c - s) / (c + s))
    return min(max(b, 0.0), 1.0)


def path_loss(d: float, lam: float) -> float:
    """Free-space power attenuation (4 pi d / lambda)^2."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    if lam <= 0:
        raise ValueError(f"wavelength must be positive, got {lam}")
    return (4.0 * math.pi * d / lam) ** 2


def build_path_set(
    p: Point,
    array: ArrayGeometry,
    surfaces: Sequence[Surface],
    m_subcarriers: int = 1,
) -> PathSet:
    """Valid propagation paths per antenna element at position ``p``.

    Each element gets at most one direct record plus one bounce record per
    surface whose specular path is geometrically valid. Bounce coefficients
    are evaluated at the per-element incidence angle, constant across
    subcarriers (the shipped reflection models are frequency independent).
    """
    p = as_point(p)
    per_element = []
    for element in array.elements:
        if element == p:
            raise ValueError("UE position coincides with an element position")
        paths = []
        if los_indicator(element, p, surfaces):
            d = math.hypot(element.x - p.x, element.y - p.y)
            paths.append(
                PathRecord("los", None, None, d, (1.0,) * m_subcarriers)
            )
        for s in surfaces:
            if not nlos_indicator(element, s, p, surfaces):
                continue
            r = reflection_point(element, p, s.geom, EPS_GEOM)
            d = math.hypot(element.x - r.x, element.y - r.y) + math.hypot(r.x - p.x, r.y - p.y)
            theta = incidence_angle(element, r, s.geom)
            beta = reflection_coefficient(s.reflect_model, theta)
            paths.append(
                PathRecord("nlos", s.id, r, d, (beta,) * m_subcarriers)
            )
        per_element.append(tuple(paths))
    return PathSet(tuple(per_element))


def channel_matrix(
    p: Point,
    array: ArrayGeometry,
    surfaces: Sequence[Surface],
    ofdm: OfdmConfig,
) -> np.ndarray:
    """Complex channel, shape (M, N): subcarriers by elements.

    Entry (m, n) sums beta / sqrt(path_loss) * exp(-i 2 pi d / lambda_m) over
    the element's valid paths; an element with no path gives a zero column.
    Called with the full surface list this is the true channel, with a known
    subset the predicted one - same code path, bit-identical at full
    awareness.
    """
    ps = build_path_set(p, array, surfaces, ofdm.m_subcarriers)
    lams = ofdm.wavelengths
    h = np.zeros((ofdm.m_subcarriers, array.n_elements), dtype=np.complex128)
    for n, paths in enumerate(ps.per_element):
        for rec in paths:
            for m, lam in enumerate(lams):
                amp = rec.beta_per_subcarrier[m] / math.sqrt(path_loss(rec.distance, lam))
                h[m, n] += amp * np.exp(-2j * math.pi * rec.distance / lam)
    return h


def ff_path_records(
    p: Point, ref: Point, surfaces: Sequence[Surface]
) -> list[tuple[float, float, float, float]]:
    """Array-common paths seen from the reference point.

    Returns (distance, beta, kx, ky) per valid path, where (kx, ky) is the
    unit arrival direction pointing from the reference point toward the
    incoming wave (the UE for the direct path, the bounce point otherwise).
    """
    p = as_point(p)
    ref = as_point(ref)
    out = []
    if los_indicator(ref, p, surfaces):
        d = math.hypot(p.x - ref.x, p.y - ref.y)
        out.append((d, 1.0, (p.x - ref.x) / d, (p.y - ref.y) / d))
    for s in surfaces:
        if not nlos_indicator(ref, s, p, surfaces):
            continue
        r = reflection_point(ref, p, s.geom, EPS_GEOM)
        d1 = math.hypot(r.x - ref.x, r.y - ref.y)
        d2 = math.hypot(p.x - r.x, p.y - r.y)
        theta = incidence_angle(ref, r, s.geom)
        beta = reflection_coefficient(s.reflect_model, theta)
        out.append((d1 + d2, beta, (r.x - ref.x) / d1, (r.y - ref.y) / d1))
    return out


def ff_channel_matrix(
    p: Point,
    array: ArrayGeometry,
    surfaces: Sequence[Surface],
    ofdm: OfdmConfig,
) -> np.ndarray:
    """Planar-wavefront baseline channel, shape (M, N).

    Path indicators, bounce points, distances and losses are evaluated once
    at the array centroid and shared by every element; per-element phases
    follow the planar model d_n = d_ref - u_n . k_hat. Partial blockage and
    partial reflection are therefore not represented.
    """
    ref = array.centroid
    records = ff_path_records(p, ref, surfaces)
    lams = ofdm.wavelengths
    h = np.zeros((ofdm.m_subcarriers, array.n_elements), dtype=np.complex128)
    for n, el in enumerate(array.elements):
        ux = el.x - ref.x
        uy = el.y - ref.y
        for d_ref, beta, kx, ky in records:
            d_n = d_ref - (ux * kx + uy * ky)
            for m, lam in enumerate(lams):
                amp = beta / math.sqrt(path_loss(d_ref, lam))
                h[m, n] += amp * np.exp(-2j * math.pi * d_n / lam)
    return h
