import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lotrank.geodata import (
    GeoJsonError,
    MatchResult,
    ParkingLot,
    PoiCategory,
    SizeClass,
    classify_size,
    geodesic_area_sqm,
    match_all,
    match_poi_to_lot,
    match_records_ndjson,
    parking_collection_to_geojson,
    parse_parking_collection,
    parse_poi_collection,
    poi_collection_to_geojson,
)
from lotrank.geomath import GeoPoint, PolygonGeom
from lotrank.spatial import build_spatial_index

from .oracles import M_PER_DEG_LAT_EQ, M_PER_DEG_LON_EQ


def feature_collection(features) -> bytes:
    return json.dumps({"type": "FeatureCollection", "features": features}).encode()


def point_feature(fid, lon, lat, props) -> dict:
    return {
        "type": "Feature",
        "id": fid,
        "properties": props,
        "geometry": {"type": "Point", "coordinates": [lon, lat]},
    }


def square_ring(lon0, lat0, side_m):
    # Offsets use the equator oracle constants, so keep fixture latitudes ~0
    # whenever the test asserts areas or distances.
    dlon = side_m / M_PER_DEG_LON_EQ
    dlat = side_m / M_PER_DEG_LAT_EQ
    return [
        [lon0, lat0],
        [lon0 + dlon, lat0],
        [lon0 + dlon, lat0 + dlat],
        [lon0, lat0 + dlat],
        [lon0, lat0],
    ]


def polygon_feature(fid, rings, props) -> dict:
    return {
        "type": "Feature",
        "id": fid,
        "properties": props,
        "geometry": {"type": "Polygon", "coordinates": rings},
    }


def parking_props(**overrides):
    props = {"amenity": "parking", "parking": "surface"}
    props.update(overrides)
    return props


# --- POI parsing --------------------------------------------------------------


def test_single_supermarket_point():
    data = feature_collection([point_feature("n1", 8.0, 50.0, {"shop": "supermarket"})])
    pois = parse_poi_collection(data)
    assert len(pois) == 1
    assert pois[0].category is PoiCategory.SUPERMARKET
    assert pois[0].id == "n1"


def test_non_matching_shops_are_dropped():
    data = feature_collection([point_feature("n1", 8.0, 50.0, {"shop": "bakery"})])
    assert parse_poi_collection(data) == []


def test_mixed_collection_keeps_file_order():
    data = feature_collection(
        [
            point_feature("a", 8.0, 50.0, {"shop": "supermarket"}),
            point_feature("b", 8.1, 50.0, {"shop": "bakery"}),
            point_feature("c", 8.2, 50.0, {"shop": "doityourself", "name": "store c"}),
            point_feature("d", 8.3, 50.0, {"shop": "supermarket"}),
        ]
    )
    pois = parse_poi_collection(data)
    assert [p.id for p in pois] == ["a", "c", "d"]
    assert [p.category for p in pois] == [
        PoiCategory.SUPERMARKET,
        PoiCategory.DIY,
        PoiCategory.SUPERMARKET,
    ]
    assert pois[1].name == "store c"


def test_malformed_json_reports_byte_offset():
    with pytest.raises(GeoJsonError, match=r"byte \d+"):
        parse_poi_collection(b'{"type": "FeatureCollection", "features": [')


def test_not_a_feature_collection():
    with pytest.raises(GeoJsonError):
        parse_poi_collection(b'{"type": "Feature"}')


def test_matching_feature_with_wrong_geometry_warns():
    data = feature_collection(
        [
            {
                "type": "Feature",
                "id": "w9",
                "properties": {"shop": "supermarket"},
                "geometry": {"type": "Polygon", "coordinates": [square_ring(8.0, 50.0, 50)]},
            },
            point_feature("n2", 8.0, 50.0, {"shop": "supermarket"}),
        ]
    )
    warnings: list[str] = []
    pois = parse_poi_collection(data, warnings)
    assert [p.id for p in pois] == ["n2"]
    assert len(warnings) == 1


# --- parking parsing ----------------------------------------------------------


def test_surface_lot_without_access_is_kept():
    data = feature_collection([polygon_feature("w1", [square_ring(8.0, 0.0, 80)], parking_props())])
    lots = parse_parking_collection(data)
    assert len(lots) == 1
    assert lots[0].id == "w1"
    assert lots[0].area_sqm == pytest.approx(6400.0, rel=0.005)
    assert lots[0].size_class is SizeClass.MEDIUM


def test_underground_lot_is_dropped():
    data = feature_collection(
        [polygon_feature("w1", [square_ring(8.0, 50.0, 80)], parking_props(parking="underground"))]
    )
    assert parse_parking_collection(data) == []


def test_private_access_is_dropped():
    data = feature_collection(
        [polygon_feature("w1", [square_ring(8.0, 50.0, 80)], parking_props(access="private"))]
    )
    assert parse_parking_collection(data) == []


@pytest.mark.parametrize("access", ["yes", "customers", "permissive"])
def test_customer_access_values_kept(access):
    data = feature_collection(
        [polygon_feature("w1", [square_ring(8.0, 50.0, 80)], parking_props(access=access))]
    )
    assert len(parse_parking_collection(data)) == 1


def test_rooftop_is_kept():
    data = feature_collection(
        [polygon_feature("w1", [square_ring(8.0, 50.0, 80)], parking_props(parking="rooftop"))]
    )
    assert len(parse_parking_collection(data)) == 1


def test_multipolygon_splits_into_suffixed_parts():
    ring_a = square_ring(8.0, 50.0, 80)
    ring_b = square_ring(8.01, 50.0, 120)
    feature = {
        "type": "Feature",
        "id": "r5",
        "properties": parking_props(),
        "geometry": {"type": "MultiPolygon", "coordinates": [[ring_a], [ring_b]]},
    }
    lots = parse_parking_collection(feature_collection([feature]))
    assert [lot.id for lot in lots] == ["r5#0", "r5#1"]
    assert lots[0].area_sqm < lots[1].area_sqm


def test_malformed_ring_skips_feature_with_warning():
    bad = {
        "type": "Feature",
        "id": "w2",
        "properties": parking_props(),
        "geometry": {"type": "Polygon", "coordinates": [[[8.0, 50.0], [8.001, 50.0]]]},
    }
    good = polygon_feature("w3", [square_ring(8.0, 50.0, 80)], parking_props())
    warnings: list[str] = []
    lots = parse_parking_collection(feature_collection([bad, good]), warnings)
    assert [lot.id for lot in lots] == ["w3"]
    assert len(warnings) == 1


# --- size classes ---------------------------------------------------------------


@pytest.mark.parametrize(
    "area,expected",
    [
        (36_866.0, SizeClass.LARGE),
        (2_971.0, SizeClass.SMALL),
        (7_500.0, SizeClass.MEDIUM),
        (5_000.0, SizeClass.SMALL),
        (10_000.0, SizeClass.LARGE),
        (5_000.0001, SizeClass.MEDIUM),
        (9_999.9999, SizeClass.MEDIUM),
    ],
)
def test_classify_size(area, expected):
    assert classify_size(area) is expected


@pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
def test_classify_size_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        classify_size(bad)


@given(st.floats(min_value=1e-9, max_value=1e12, allow_nan=False, allow_infinity=False))
@settings(max_examples=300, deadline=None)
def test_classify_size_is_a_partition(area):
    result = classify_size(area)
    predicates = {
        SizeClass.SMALL: area <= 5_000.0,
        SizeClass.MEDIUM: 5_000.0 < area < 10_000.0,
        SizeClass.LARGE: area >= 10_000.0,
    }
    assert sum(predicates.values()) == 1
    assert predicates[result]


# --- round trips ----------------------------------------------------------------


def test_poi_round_trip_preserves_everything():
    data = feature_collection(
        [
            point_feature("a", 8.123456789, 50.987654321, {"shop": "supermarket", "name": "Alpha"}),
            point_feature("b", 8.2, 50.0, {"shop": "doityourself"}),
        ]
    )
    once = parse_poi_collection(data)
    twice = parse_poi_collection(poi_collection_to_geojson(once))
    assert twice == once


def test_parking_round_trip_preserves_everything():
    ring = square_ring(8.123456789, 49.987654321, 80)
    hole = square_ring(8.12346, 49.98766, 10)
    data = feature_collection(
        [polygon_feature("w1", [ring, hole], parking_props(access="customers", surface="asphalt"))]
    )
    once = parse_parking_collection(data)
    twice = parse_parking_collection(parking_collection_to_geojson(once))
    assert len(once) == len(twice) == 1
    assert once[0].id == twice[0].id
    assert once[0].tags == twice[0].tags
    assert once[0].geometry.exterior == twice[0].geometry.exterior
    assert once[0].geometry.holes == twice[0].geometry.holes
    assert once[0].area_sqm == twice[0].area_sqm


# --- matching --------------------------------------------------------------------


def lot_from_ring(lot_id, lon0, lat0, side_m) -> ParkingLot:
    ring = [GeoPoint(lon, lat) for lon, lat in square_ring(lon0, lat0, side_m)[:-1]]
    return ParkingLot.from_geometry(lot_id, PolygonGeom(exterior=ring), {"amenity": "parking"})


def test_poi_inside_lot_matches_at_distance_zero():
    lot = lot_from_ring("w1", 0.0, 0.0, 100)
    index = build_spatial_index([lot])
    poi = parse_poi_collection(
        feature_collection(
            [point_feature("p1", 50 / M_PER_DEG_LON_EQ, 50 / M_PER_DEG_LAT_EQ, {"shop": "supermarket"})]
        )
    )[0]
    match = match_poi_to_lot(poi, index)
    assert match == MatchResult(poi_id="p1", lot_id="w1", distance_m=0.0)


def test_lot_12m_away_is_not_matched():
    lot = lot_from_ring("w1", 0.0, 0.0, 100)
    index = build_spatial_index([lot])
    poi = parse_poi_collection(
        feature_collection(
            [
                point_feature(
                    "p1", (100 + 12) / M_PER_DEG_LON_EQ, 50 / M_PER_DEG_LAT_EQ, {"shop": "supermarket"}
                )
            ]
        )
    )[0]
    assert match_poi_to_lot(poi, index) is None


def test_nearest_of_5m_and_50m_lots_wins():
    # POI sits 5 m east of lot A's east edge and 50 m west of lot B's west edge.
    poi_lon = (100 + 5) / M_PER_DEG_LON_EQ
    lot_a = lot_from_ring("a", 0.0, 0.0, 100)
    lot_b = lot_from_ring("b", (100 + 5 + 50) / M_PER_DEG_LON_EQ, 0.0, 100)
    index = build_spatial_index([lot_a, lot_b])
    poi = parse_poi_collection(
        feature_collection(
            [point_feature("p1", poi_lon, 50 / M_PER_DEG_LAT_EQ, {"shop": "supermarket"})]
        )
    )[0]
    match = match_poi_to_lot(poi, index, threshold_m=10.0)
    assert match is not None
    assert match.lot_id == "a"
    assert match.distance_m == pytest.approx(5.0, rel=1e-3)


def test_threshold_must_be_positive():
    lot = lot_from_ring("w1", 0.0, 0.0, 100)
    index = build_spatial_index([lot])
    poi = parse_poi_collection(
        feature_collection([point_feature("p1", 0.0, 0.0, {"shop": "supermarket"})])
    )[0]
    with pytest.raises(ValueError):
        match_poi_to_lot(poi, index, threshold_m=0.0)


def test_match_records_ndjson_shape():
    lot = lot_from_ring("w1", 0.0, 0.0, 150)
    index = build_spatial_index([lot])
    pois = parse_poi_collection(
        feature_collection(
            [point_feature("p1", 50 / M_PER_DEG_LON_EQ, 50 / M_PER_DEG_LAT_EQ, {"shop": "supermarket"})]
        )
    )
    matches = match_all(pois, index)
    text = match_records_ndjson(matches, {"w1": lot})
    record = json.loads(text.strip())
    assert set(record) == {"poi_id", "lot_id", "distance_m", "area_sqm", "size_class"}
    assert record["size_class"] == "large"


def test_area_example_from_spec_sizes():
    # 192 m x 192 m lot ~ 36.9k sqm classifies large, mirroring the worked example.
    lot = lot_from_ring("big", 0.0, 0.0, 192.0)
    assert lot.size_class is SizeClass.LARGE
    assert geodesic_area_sqm(lot.geometry) == pytest.approx(192.0**2, rel=0.005)
    assert math.isclose(lot.area_sqm, geodesic_area_sqm(lot.geometry))
