"""Planar geometry over a local east/north frame.

Latitude/longitude pairs are projected onto a flat equirectangular frame
centered on an origin point; sight rays, polygon intersection, and
containment all operate in that frame in meters.  At sub-kilometer scale
the projection error is below a centimeter, which is why no UTM zone
handling is needed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

# WGS84 semi-major axis.
EARTH_RADIUS_M = 6378137.0
_DEG_TO_M = EARTH_RADIUS_M * math.pi / 180.0

# Projection is only valid at city-block scale around the origin.
MAX_PROJECTION_DELTA_DEG = 0.1

# Tolerance for treating a point as lying on a polygon edge, in meters.
_ON_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 coordinate: lat in [-90, 90], lon in [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValidationError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise ValidationError(f"longitude {self.lon} outside [-180, 180)")


@dataclass(frozen=True)
class LocalPoint:
    """Point in the local frame: x meters east, y meters north of the origin."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"non-finite local point ({self.x}, {self.y})")


@dataclass(frozen=True)
class SightRay:
    """Ray from a camera position along a unit direction (east, north)."""

    origin: LocalPoint
    direction: tuple[float, float]

    def __post_init__(self) -> None:
        norm = math.hypot(self.direction[0], self.direction[1])
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"ray direction norm {norm} not within 1e-12 of 1")


@dataclass(frozen=True)
class Polygon2D:
    """Simple polygon as an ordered vertex ring, implicitly closed.

    Requires at least three vertices, no two consecutive vertices identical
    (the wrap-around pair included), and non-zero signed area.
    """

    vertices: tuple[LocalPoint, ...]

    def __post_init__(self) -> None:
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValidationError(f"polygon needs >= 3 vertices, got {len(verts)}")
        for i, a in enumerate(verts):
            b = verts[(i + 1) % len(verts)]
            if a.x == b.x and a.y == b.y:
                raise ValidationError(f"consecutive identical vertices at index {i}")
        if self.signed_area() == 0.0:
            raise ValidationError("polygon has zero area")

    def signed_area(self) -> float:
        area = 0.0
        verts = self.vertices
        for i, a in enumerate(verts):
            b = verts[(i + 1) % len(verts)]
            area += a.x * b.y - b.x * a.y
        return area / 2.0

    def centroid(self) -> LocalPoint:
        """Area centroid of the ring."""
        area = self.signed_area()
        cx = cy = 0.0
        verts = self.vertices
        for i, a in enumerate(verts):
            b = verts[(i + 1) % len(verts)]
            w = a.x * b.y - b.x * a.y
            cx += (a.x + b.x) * w
            cy += (a.y + b.y) * w
        return LocalPoint(cx / (6.0 * area), cy / (6.0 * area))


def project_local(origin: GeoPoint, p: GeoPoint) -> LocalPoint:
    """Project ``p`` onto the equirectangular frame centered on ``origin``.

    Valid only within 0.1 degrees of the origin in both axes; beyond that
    the flat-earth approximation (and this function) refuses to answer.
    """
    dlat = p.lat - origin.lat
    dlon = p.lon - origin.lon
    if abs(dlat) >= MAX_PROJECTION_DELTA_DEG or abs(dlon) >= MAX_PROJECTION_DELTA_DEG:
        raise ValidationError(
            f"point ({p.lat}, {p.lon}) too far from projection origin "
            f"({origin.lat}, {origin.lon}): deltas must stay below "
            f"{MAX_PROJECTION_DELTA_DEG} degrees"
        )
    x = dlon * math.cos(math.radians(origin.lat)) * _DEG_TO_M
    y = dlat * _DEG_TO_M
    return LocalPoint(x, y)


def unproject_local(origin: GeoPoint, p: LocalPoint) -> GeoPoint:
    """Analytic inverse of :func:`project_local`."""
    lat = origin.lat + p.y / _DEG_TO_M
    lon = origin.lon + p.x / (_DEG_TO_M * math.cos(math.radians(origin.lat)))
    return GeoPoint(lat, lon)


def ray_from_bearing(camera: LocalPoint, bearing: float) -> SightRay:
    """Build the sight ray for a compass bearing in degrees.

    Bearing is clockwise from true north in [0, 360), so the direction
    vector is (sin b, cos b) in (east, north) components.
    """
    if not (math.isfinite(bearing) and 0.0 <= bearing < 360.0):
        raise ValidationError(f"bearing {bearing} outside [0, 360)")
    rad = math.radians(bearing)
    return SightRay(origin=camera, direction=(math.sin(rad), math.cos(rad)))


def _on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> bool:
    """True if (px, py) lies on segment a-b within _ON_EDGE_EPS meters."""
    ex, ey = bx - ax, by - ay
    seg_len = math.hypot(ex, ey)
    if seg_len == 0.0:
        return math.hypot(px - ax, py - ay) <= _ON_EDGE_EPS
    cross = ex * (py - ay) - ey * (px - ax)
    if abs(cross) / seg_len > _ON_EDGE_EPS:
        return False
    dot = (px - ax) * ex + (py - ay) * ey
    return -_ON_EDGE_EPS * seg_len <= dot <= seg_len * seg_len + _ON_EDGE_EPS * seg_len


def point_in_polygon(p: LocalPoint, poly: Polygon2D) -> bool:
    """Even-odd containment test; boundary points count as inside."""
    px, py = p.x, p.y
    verts = poly.vertices
    inside = False
    for i, a in enumerate(verts):
        b = verts[(i + 1) % len(verts)]
        if _on_segment(px, py, a.x, a.y, b.x, b.y):
            return True
        # Half-open rule on y avoids double-counting vertex crossings.
        if (a.y > py) != (b.y > py):
            x_cross = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y)
            if px < x_cross:
                inside = not inside
    return inside


def _ray_segment_distance(
    ox: float, oy: float, dx: float, dy: float,
    ax: float, ay: float, bx: float, by: float,
) -> float | None:
    """Smallest t >= 0 with origin + t*d on segment a-b, or None."""
    ex, ey = bx - ax, by - ay
    aox, aoy = ax - ox, ay - oy
    denom = dx * ey - dy * ex
    if abs(denom) < 1e-15:
        # Parallel.  Only a collinear segment can contribute.
        if abs(aox * dy - aoy * dx) > _ON_EDGE_EPS:
            return None
        candidates = []
        for qx, qy in ((ax, ay), (bx, by)):
            t = (qx - ox) * dx + (qy - oy) * dy
            if t >= 0.0:
                candidates.append(t)
        # Origin strictly between the endpoints hits at t = 0.
        if (ax - ox) * (bx - ox) + (ay - oy) * (by - oy) <= 0.0:
            candidates.append(0.0)
        return min(candidates) if candidates else None
    t = (aox * ey - aoy * ex) / denom
    s = (aox * dy - aoy * dx) / denom
    # Endpoint-inclusive in s so edge-grazing hits are not lost to jitter.
    if t >= -1e-12 and -1e-12 <= s <= 1.0 + 1e-12:
        return max(t, 0.0)
    return None


def ray_polygon_distance(ray: SightRay, poly: Polygon2D) -> float | None:
    """Distance along the ray to the polygon, or None if it is never hit.

    A ray starting inside the polygon (boundary included) reports 0, so a
    camera within a building's footprint binds to that building.
    """
    if point_in_polygon(ray.origin, poly):
        return 0.0
    ox, oy = ray.origin.x, ray.origin.y
    dx, dy = ray.direction
    best: float | None = None
    verts = poly.vertices
    for i, a in enumerate(verts):
        b = verts[(i + 1) % len(verts)]
        t = _ray_segment_distance(ox, oy, dx, dy, a.x, a.y, b.x, b.y)
        if t is not None and (best is None or t < best):
            best = t
    return best
