from datetime import date, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lotrank.geodata import ParkingLot, SizeClass
from lotrank.geomath import GeoPoint, PolygonGeom
from lotrank.weakpairs import (
    LabeledPair,
    SplitSpec,
    WeekendPair,
    cross_weekend_pairs,
    enumerate_weekend_pairs,
    make_labeled_pairs,
    read_pairs,
    read_split,
    split_lots,
    write_pairs,
    write_split,
)

SAT = date(2023, 6, 3)  # a Saturday
SUN = SAT + timedelta(days=1)


def lot_with_class(lot_id: str, size_class: SizeClass) -> ParkingLot:
    polygon = PolygonGeom(
        exterior=[GeoPoint(0, 0), GeoPoint(0.001, 0), GeoPoint(0.001, 0.001), GeoPoint(0, 0.001)]
    )
    return ParkingLot(id=lot_id, geometry=polygon, tags={}, area_sqm=1.0, size_class=size_class)


# --- weekend enumeration ---------------------------------------------------------


def test_weekend_pair_requires_adjacent_sunday():
    dates = [SAT, SUN, SAT + timedelta(weeks=1)]
    pairs = enumerate_weekend_pairs("lot", dates)
    assert pairs == [WeekendPair("lot", SAT, SUN)]


def test_lonely_sunday_yields_nothing():
    assert enumerate_weekend_pairs("lot", [SUN]) == []


def test_four_full_weekends_in_order():
    dates = []
    for w in range(4):
        dates += [SAT + timedelta(weeks=w), SUN + timedelta(weeks=w)]
    pairs = enumerate_weekend_pairs("lot", reversed(dates))
    assert len(pairs) == 4
    assert [p.sat_date for p in pairs] == sorted(p.sat_date for p in pairs)


def test_weekend_pair_validation():
    with pytest.raises(ValueError):
        WeekendPair("lot", SUN, SAT)
    with pytest.raises(ValueError):
        WeekendPair("lot", SAT, SAT + timedelta(days=2))


# --- labeling ---------------------------------------------------------------------


def test_both_orders_labeling():
    pairs = make_labeled_pairs([WeekendPair("lot", SAT, SUN)])
    assert pairs == [
        LabeledPair("lot", SAT, SUN, 1),
        LabeledPair("lot", SUN, SAT, 0),
    ]


def test_single_order_labeling():
    pairs = make_labeled_pairs([WeekendPair("lot", SAT, SUN)], include_both_orders=False)
    assert pairs == [LabeledPair("lot", SAT, SUN, 1)]


def test_label_balance_with_both_orders():
    weekends = [
        WeekendPair("lot", SAT + timedelta(weeks=w), SUN + timedelta(weeks=w)) for w in range(10)
    ]
    labeled = make_labeled_pairs(weekends)
    assert len(labeled) == 20
    assert sum(p.label for p in labeled) / len(labeled) == 0.5


def test_labels_recomputable_from_dates():
    weekends = [
        WeekendPair("lot", SAT + timedelta(weeks=w), SUN + timedelta(weeks=w)) for w in range(5)
    ]
    for pair in make_labeled_pairs(weekends):
        assert pair.label == int(pair.date_a.weekday() == 5)


def test_swap_closure():
    labeled = make_labeled_pairs([WeekendPair("lot", SAT, SUN)])
    as_set = {(p.date_a, p.date_b, p.label) for p in labeled}
    flipped = {(b, a, 1 - y) for a, b, y in as_set}
    assert as_set == flipped


def test_cross_weekend_products():
    dates = [SAT, SUN, SAT + timedelta(weeks=1), SUN + timedelta(weeks=1)]
    pairs = cross_weekend_pairs("lot", dates)
    assert len(pairs) == 2 * 2 * 2
    assert all(p.label in (0, 1) for p in pairs)


def test_labeled_pair_validation():
    with pytest.raises(ValueError):
        LabeledPair("lot", SAT, SAT, 1)
    with pytest.raises(ValueError):
        LabeledPair("lot", SAT, SUN, 2)


# --- splits --------------------------------------------------------------------------


def test_ten_lots_split_eight_two():
    lots = [lot_with_class(f"l{i:02d}", SizeClass.LARGE) for i in range(10)]
    split = split_lots(lots, seed=3)
    assert len(split.classes["large"]["train"]) == 8
    assert len(split.classes["large"]["test"]) == 2
    assert set(split.train_lot_ids) | set(split.test_lot_ids) == {lot.id for lot in lots}
    assert not split.train_lot_ids & split.test_lot_ids


def test_split_is_deterministic_per_seed():
    lots = [lot_with_class(f"l{i:02d}", SizeClass.MEDIUM) for i in range(10)]
    assert split_lots(lots, seed=9).classes == split_lots(lots, seed=9).classes


def test_different_seeds_differ():
    lots = [lot_with_class(f"l{i:03d}", SizeClass.SMALL) for i in range(100)]
    one = split_lots(lots, seed=1)
    two = split_lots(lots, seed=2)
    assert one.classes != two.classes


def test_split_stratifies_by_class():
    lots = (
        [lot_with_class(f"a{i}", SizeClass.LARGE) for i in range(5)]
        + [lot_with_class(f"b{i}", SizeClass.MEDIUM) for i in range(5)]
        + [lot_with_class(f"c{i}", SizeClass.SMALL) for i in range(5)]
    )
    split = split_lots(lots, seed=0)
    for name in ("large", "medium", "small"):
        assert len(split.classes[name]["test"]) == 1
        assert len(split.classes[name]["train"]) == 4


def test_single_lot_class_goes_to_train():
    lots = [lot_with_class("only", SizeClass.LARGE)] + [
        lot_with_class(f"m{i}", SizeClass.MEDIUM) for i in range(4)
    ]
    split = split_lots(lots, seed=0)
    assert split.classes["large"] == {"train": ["only"], "test": []}


def test_split_rejects_bad_ratio():
    with pytest.raises(ValueError):
        split_lots([lot_with_class("a", SizeClass.SMALL)], ratio=1.0)


@given(st.integers(min_value=2, max_value=60), st.integers(min_value=0, max_value=2**32))
@settings(max_examples=40, deadline=None)
def test_split_test_size_rule(n, seed):
    lots = [lot_with_class(f"l{i:03d}", SizeClass.LARGE) for i in range(n)]
    split = split_lots(lots, seed=seed)
    expected = min(max(int(0.2 * n + 0.5), 1), n - 1)
    assert len(split.classes["large"]["test"]) == expected


# --- files ------------------------------------------------------------------------------


def test_pairs_file_roundtrip(tmp_path):
    pairs = make_labeled_pairs([WeekendPair("lot", SAT, SUN)])
    path = tmp_path / "pairs.ndjson"
    write_pairs(path, pairs)
    assert read_pairs(path) == pairs


def test_split_file_roundtrip(tmp_path):
    lots = [lot_with_class(f"l{i}", SizeClass.LARGE) for i in range(6)]
    split = split_lots(lots, seed=5)
    path = tmp_path / "split.json"
    write_split(path, split)
    back = read_split(path)
    assert back.seed == split.seed
    assert back.ratio == split.ratio
    assert back.classes == split.classes


def test_split_spec_json_shape(tmp_path):
    lots = [lot_with_class(f"l{i}", SizeClass.SMALL) for i in range(4)]
    split = split_lots(lots, seed=1)
    doc = SplitSpec.from_json(split.to_json())
    assert set(doc.classes) == {"small"}
    assert set(doc.classes["small"]) == {"train", "test"}
