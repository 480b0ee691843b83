"""POI and parking-lot ingestion from OSM-style GeoJSON, plus POI-to-lot matching.

Keeps supermarket and hardware-store points, and surface/rooftop customer
parking polygons; each POI is matched to its nearest lot within a proximity
threshold (10 m by default).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

from .geomath import (
    GeometryError,
    GeoPoint,
    PolygonGeom,
    point_to_polygon_distance_m,
    polygon_area_sqm,
)

SMALL_MAX_SQM = 5_000.0
LARGE_MIN_SQM = 10_000.0
DEFAULT_MATCH_THRESHOLD_M = 10.0

_SHOP_CATEGORIES = {"supermarket": "SUPERMARKET", "doityourself": "DIY"}
_ACCESS_REJECT = {"private", "no"}
_PARKING_KEEP = {"surface", "rooftop"}


class GeoJsonError(ValueError):
    """Malformed GeoJSON input."""


class PoiCategory(enum.Enum):
    SUPERMARKET = "supermarket"
    DIY = "diy"


class SizeClass(enum.Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


@dataclass(frozen=True)
class PointOfInterest:
    id: str
    category: PoiCategory
    location: GeoPoint
    name: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("POI id must be non-empty")


@dataclass
class ParkingLot:
    id: str
    geometry: PolygonGeom
    tags: dict[str, str] = field(default_factory=dict)
    area_sqm: float = 0.0
    size_class: SizeClass = SizeClass.SMALL

    @classmethod
    def from_geometry(cls, id: str, geometry: PolygonGeom, tags: dict[str, str]) -> "ParkingLot":
        area = polygon_area_sqm(geometry)
        return cls(id=id, geometry=geometry, tags=tags, area_sqm=area, size_class=classify_size(area))


@dataclass(frozen=True)
class MatchResult:
    poi_id: str
    lot_id: str
    distance_m: float


def classify_size(area_sqm: float) -> SizeClass:
    """Small <= 5,000 sqm; Large >= 10,000 sqm; Medium strictly between."""
    if not (isinstance(area_sqm, (int, float)) and math.isfinite(area_sqm)) or area_sqm <= 0:
        raise ValueError(f"area must be positive and finite, got {area_sqm!r}")
    if area_sqm <= SMALL_MAX_SQM:
        return SizeClass.SMALL
    if area_sqm >= LARGE_MIN_SQM:
        return SizeClass.LARGE
    return SizeClass.MEDIUM


def geodesic_area_sqm(polygon: PolygonGeom) -> float:
    """Polygon area in square meters (local equirectangular shoelace)."""
    return polygon_area_sqm(polygon)


def _load_feature_collection(geojson_bytes: bytes | str) -> list[dict]:
    text = geojson_bytes.decode("utf-8") if isinstance(geojson_bytes, bytes) else geojson_bytes
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise GeoJsonError(f"invalid JSON at byte {byte_offset}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeoJsonError("expected a GeoJSON FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise GeoJsonError("FeatureCollection has no feature list")
    return features


def _feature_id(feature: dict, fallback: str) -> str:
    props = feature.get("properties") or {}
    for candidate in (feature.get("id"), props.get("@id"), props.get("id")):
        if candidate is not None and str(candidate):
            return str(candidate)
    return fallback


def _string_tags(props: dict) -> dict[str, str]:
    return {str(k): v if isinstance(v, str) else json.dumps(v) for k, v in props.items()}


def parse_poi_collection(
    geojson_bytes: bytes | str, warnings: list[str] | None = None
) -> list[PointOfInterest]:
    """Extract supermarket / DIY-store POIs from a GeoJSON FeatureCollection.

    Only Point features with shop=supermarket or shop=doityourself are kept,
    in file order. Matching features with a non-Point geometry are skipped and
    reported through the optional `warnings` sink.
    """
    features = _load_feature_collection(geojson_bytes)
    pois: list[PointOfInterest] = []
    for i, feature in enumerate(features):
        props = feature.get("properties") or {}
        shop = props.get("shop")
        if shop not in _SHOP_CATEGORIES:
            continue
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Point":
            if warnings is not None:
                warnings.append(f"feature {i}: shop={shop} has non-Point geometry, skipped")
            continue
        coords = geometry.get("coordinates")
        if not isinstance(coords, (list, tuple)) or len(coords) < 2:
            raise GeoJsonError(f"feature {i}: Point without lon/lat coordinates")
        pois.append(
            PointOfInterest(
                id=_feature_id(feature, f"poi/{i}"),
                category=PoiCategory[_SHOP_CATEGORIES[shop]],
                location=GeoPoint(float(coords[0]), float(coords[1])),
                name=props.get("name"),
            )
        )
    return pois


def _ring_from_coords(coords: list) -> list[GeoPoint]:
    points = [GeoPoint(float(c[0]), float(c[1])) for c in coords]
    # GeoJSON rings are closed; store unclosed.
    if len(points) > 1 and points[0] == points[-1]:
        points = points[:-1]
    return points


def _polygon_from_coords(rings: list) -> PolygonGeom:
    if not rings:
        raise GeometryError("polygon with no rings")
    exterior = _ring_from_coords(rings[0])
    holes = [_ring_from_coords(r) for r in rings[1:]]
    return PolygonGeom(exterior=exterior, holes=holes)


def _is_customer_parking(props: dict) -> bool:
    if props.get("amenity") != "parking":
        return False
    if props.get("parking") not in _PARKING_KEEP:
        return False
    return props.get("access") not in _ACCESS_REJECT


def parse_parking_collection(
    geojson_bytes: bytes | str, warnings: list[str] | None = None
) -> list[ParkingLot]:
    """Extract customer parking lots from a GeoJSON FeatureCollection.

    Keeps Polygon/MultiPolygon features tagged amenity=parking with
    parking in {surface, rooftop} and access not in {private, no}. Each
    MultiPolygon part becomes its own lot with a `#<part>` id suffix. Area and
    size class are derived from the geometry; malformed rings skip the feature.
    """
    features = _load_feature_collection(geojson_bytes)
    lots: list[ParkingLot] = []
    for i, feature in enumerate(features):
        props = feature.get("properties") or {}
        if not _is_customer_parking(props):
            continue
        geometry = feature.get("geometry") or {}
        gtype = geometry.get("type")
        if gtype == "Polygon":
            parts = [geometry.get("coordinates")]
        elif gtype == "MultiPolygon":
            parts = geometry.get("coordinates") or []
        else:
            if warnings is not None:
                warnings.append(f"feature {i}: parking feature with geometry {gtype}, skipped")
            continue
        base_id = _feature_id(feature, f"lot/{i}")
        tags = _string_tags(props)
        for k, rings in enumerate(parts):
            lot_id = base_id if gtype == "Polygon" else f"{base_id}#{k}"
            try:
                polygon = _polygon_from_coords(rings)
                lots.append(ParkingLot.from_geometry(lot_id, polygon, dict(tags)))
            except (GeometryError, TypeError, IndexError) as exc:
                if warnings is not None:
                    warnings.append(f"feature {i} ({lot_id}): {exc}, skipped")
    return lots


def _closed_ring_coords(ring: list[GeoPoint]) -> list[list[float]]:
    coords = [[p.lon, p.lat] for p in ring]
    coords.append(coords[0][:])
    return coords


def poi_collection_to_geojson(pois: list[PointOfInterest]) -> bytes:
    """Serialize POIs back to a FeatureCollection that re-parses identically."""
    features = []
    for poi in pois:
        props: dict[str, object] = {"shop": {v: k for k, v in _SHOP_CATEGORIES.items()}[poi.category.name]}
        if poi.name is not None:
            props["name"] = poi.name
        features.append(
            {
                "type": "Feature",
                "id": poi.id,
                "properties": props,
                "geometry": {"type": "Point", "coordinates": [poi.location.lon, poi.location.lat]},
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def parking_collection_to_geojson(lots: list[ParkingLot]) -> bytes:
    """Serialize lots (one Polygon feature each) so parse -> serialize round-trips."""
    features = []
    for lot in lots:
        rings = [_closed_ring_coords(lot.geometry.exterior)]
        rings.extend(_closed_ring_coords(h) for h in lot.geometry.holes)
        features.append(
            {
                "type": "Feature",
                "id": lot.id,
                "properties": dict(lot.tags),
                "geometry": {"type": "Polygon", "coordinates": rings},
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def match_poi_to_lot(poi, index, threshold_m: float = DEFAULT_MATCH_THRESHOLD_M):
    """Nearest lot within threshold_m of the POI, or None.

    Distance is 0 for containment; ties between equidistant lots go to the
    smaller lot id. `index` is a SpatialIndex (see lotrank.spatial).
    """
    if threshold_m <= 0:
        raise ValueError("threshold_m must be positive")
    found = index.nearest(poi.location.lon, poi.location.lat)
    if found is None:
        return None
    lot, distance = found
    if distance > threshold_m:
        return None
    return MatchResult(poi_id=poi.id, lot_id=lot.id, distance_m=distance)


def match_all(pois, index, threshold_m: float = DEFAULT_MATCH_THRESHOLD_M) -> list[MatchResult]:
    """Match every POI, dropping the ones with no lot in range."""
    out = []
    for poi in pois:
        result = match_poi_to_lot(poi, index, threshold_m)
        if result is not None:
            out.append(result)
    return out


def linear_scan_nearest(lots, lon: float, lat: float):
    """Reference nearest-lot query: full scan, (distance, lot id) ordering."""
    best = None
    for lot in lots:
        d = point_to_polygon_distance_m(lon, lat, lot.geometry)
        if best is None or (d, lot.id) < (best[1], best[0].id):
            best = (lot, d)
    return best


def match_records_ndjson(matches: list[MatchResult], lots_by_id: dict[str, ParkingLot]) -> str:
    """Newline-delimited JSON match records for the CLI output contract."""
    lines = []
    for m in matches:
        lot = lots_by_id[m.lot_id]
        lines.append(
            json.dumps(
                {
                    "poi_id": m.poi_id,
                    "lot_id": m.lot_id,
                    "distance_m": m.distance_m,
                    "area_sqm": lot.area_sqm,
                    "size_class": lot.size_class.value,
                },
                sort_keys=True,
            )
        )
    return "".join(line + "\n" for line in lines)
