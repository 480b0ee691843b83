"""Local-projection geometry: areas, containment, and distances on WGS84.

Parking lots are well under 1 km across, so all computations use a local
equirectangular frame: degree offsets scaled by the meters-per-degree of
latitude/longitude at a reference latitude. The same frame is used for areas,
point-in-polygon tests, and point-to-polygon distances so the three agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Invalid or degenerate geometry."""


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self):
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise GeometryError(f"non-finite coordinate ({self.lon}, {self.lat})")
        if not -180.0 <= self.lon <= 180.0:
            raise GeometryError(f"longitude {self.lon} out of [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise GeometryError(f"latitude {self.lat} out of [-90, 90]")


@dataclass
class PolygonGeom:
    """Polygon with an unclosed exterior ring and optional unclosed holes."""

    exterior: list[GeoPoint]
    holes: list[list[GeoPoint]] = field(default_factory=list)

    def __post_init__(self):
        for ring in [self.exterior, *self.holes]:
            if len(ring) < 3:
                raise GeometryError(f"ring has {len(ring)} vertices, need >= 3")
            for a, b in zip(ring, ring[1:] + ring[:1]):
                if a.lon == b.lon and a.lat == b.lat:
                    raise GeometryError("consecutive duplicate vertices")

    def rings(self) -> list[list[GeoPoint]]:
        return [self.exterior, *self.holes]

    def bbox(self) -> tuple[float, float, float, float]:
        """(min_lon, min_lat, max_lon, max_lat) over all rings."""
        lons = [p.lon for ring in self.rings() for p in ring]
        lats = [p.lat for ring in self.rings() for p in ring]
        return min(lons), min(lats), max(lons), max(lats)


def meters_per_degree(lat_deg: float) -> tuple[float, float]:
    """(meters per degree latitude, meters per degree longitude) at a latitude."""
    phi = math.radians(lat_deg)
    m_lat = 111132.954 - 559.822 * math.cos(2 * phi) + 1.175 * math.cos(4 * phi)
    m_lon = 111412.84 * math.cos(phi) - 93.5 * math.cos(3 * phi) + 0.118 * math.cos(5 * phi)
    return m_lat, m_lon


def _ring_xy(ring: list[GeoPoint], lon0: float, lat0: float, m_lat: float, m_lon: float):
    x = np.array([(p.lon - lon0) * m_lon for p in ring])
    y = np.array([(p.lat - lat0) * m_lat for p in ring])
    return x, y


def _shoelace(x: np.ndarray, y: np.ndarray) -> float:
    """Unsigned shoelace area of an unclosed ring."""
    xr = np.roll(x, -1)
    yr = np.roll(y, -1)
    return 0.5 * abs(float(np.sum(x * yr - xr * y)))


def polygon_area_sqm(polygon: PolygonGeom) -> float:
    """Planar shoelace area in a local frame at the polygon centroid latitude.

    Holes are subtracted. Raises GeometryError for zero-area input.
    """
    lat0 = sum(p.lat for p in polygon.exterior) / len(polygon.exterior)
    lon0 = polygon.exterior[0].lon
    m_lat, m_lon = meters_per_degree(lat0)
    area = _shoelace(*_ring_xy(polygon.exterior, lon0, lat0, m_lat, m_lon))
    if area <= 0.0:
        raise GeometryError("degenerate polygon with zero area")
    for hole in polygon.holes:
        area -= _shoelace(*_ring_xy(hole, lon0, lat0, m_lat, m_lon))
    if area <= 0.0:
        raise GeometryError("holes consume the full polygon area")
    return area


def _ring_crossings(lon: float, lat: float, ring: list[GeoPoint]) -> bool:
    """Odd/even crossing parity of a rightward ray from the point."""
    inside = False
    n = len(ring)
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        if (a.lat > lat) != (b.lat > lat):
            x_int = a.lon + (lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
            if lon < x_int:
                inside = not inside
    return inside


def point_in_polygon(lon: float, lat: float, polygon: PolygonGeom) -> bool:
    """Even-odd containment over all rings (holes flip the parity)."""
    inside = False
    for ring in polygon.rings():
        if _ring_crossings(lon, lat, ring):
            inside = not inside
    return inside


def points_in_polygon_grid(lons: np.ndarray, lats: np.ndarray, polygon: PolygonGeom) -> np.ndarray:
    """Vectorized even-odd test for a lon/lat grid.

    lons has shape (W,), lats shape (H,); returns a bool (H, W) array using the
    same crossing rule as `point_in_polygon`.
    """
    glon = lons[None, :]
    glat = lats[:, None]
    inside = np.zeros((lats.size, lons.size), dtype=bool)
    for ring in polygon.rings():
        n = len(ring)
        for i in range(n):
            a = ring[i]
            b = ring[(i + 1) % n]
            straddles = (a.lat > glat) != (b.lat > glat)
            if not straddles.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                x_int = a.lon + (glat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
            inside ^= straddles & (glon < x_int)
    return inside


def _point_segment_dist(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> float:
    dx = bx - ax
    dy = by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg_sq
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_to_polygon_distance_m(lon: float, lat: float, polygon: PolygonGeom) -> float:
    """Distance in meters from a point to a polygon; 0 if the point is inside.

    Projected in the local frame at the query point's latitude, minimum over
    all ring edges.
    """
    if point_in_polygon(lon, lat, polygon):
        return 0.0
    m_lat, m_lon = meters_per_degree(lat)
    best = math.inf
    for ring in polygon.rings():
        n = len(ring)
        for i in range(n):
            a = ring[i]
            b = ring[(i + 1) % n]
            d = _point_segment_dist(
                0.0,
                0.0,
                (a.lon - lon) * m_lon,
                (a.lat - lat) * m_lat,
                (b.lon - lon) * m_lon,
                (b.lat - lat) * m_lat,
            )
            if d < best:
                best = d
    return best


def point_to_bbox_distance_m(
    lon: float, lat: float, bbox: tuple[float, float, float, float], m_lat: float, m_lon: float
) -> float:
    """Lower bound on the distance from a point to anything inside a lon/lat bbox."""
    min_lon, min_lat, max_lon, max_lat = bbox
    dx = max(min_lon - lon, 0.0, lon - max_lon) * m_lon
    dy = max(min_lat - lat, 0.0, lat - max_lat) * m_lat
    return math.hypot(dx, dy)
