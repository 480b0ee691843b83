from datetime import date, timedelta

import numpy as np
import pytest

from lotrank.chipstore import (
    ChipStoreError,
    list_dates,
    list_lot_ids,
    load_stack,
    read_chip,
    read_kept_dates,
    write_chip,
    write_qc_report,
)
from lotrank.imaging import (
    GeoTransform,
    ImageChip,
    LotImageStack,
    QcRejection,
    QcResult,
    RejectReason,
)

GT = GeoTransform(origin_lon=8.0, origin_lat=50.0, dlon=1e-5, dlat=-1e-5)


def random_chip(rng, lot="lot-a", chip_date=date(2023, 6, 3)):
    pixels = rng.uniform(0.0, 1.0, size=(4, 9, 7)).astype(np.float32)
    chip = ImageChip(lot_id=lot, capture_date=chip_date, pixels=pixels, gsd_m=3.0, geotransform=GT)
    mask = (rng.uniform(size=(9, 7)) < 0.1).astype(np.uint8) * 5
    return chip, mask


def test_write_read_roundtrip_is_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    chip, mask = random_chip(rng)
    write_chip(tmp_path, chip, mask)
    back_chip, back_mask = read_chip(tmp_path, "lot-a", date(2023, 6, 3))
    assert np.array_equal(back_chip.pixels, chip.pixels)
    assert back_chip.pixels.dtype == np.float32
    assert np.array_equal(back_mask, mask)
    assert back_chip.capture_date == chip.capture_date
    assert back_chip.geotransform == chip.geotransform
    assert back_chip.gsd_m == chip.gsd_m


def test_write_is_deterministic_bytes(tmp_path):
    rng = np.random.default_rng(1)
    chip, mask = random_chip(rng)
    store_a = tmp_path / "a"
    store_b = tmp_path / "b"
    write_chip(store_a, chip, mask)
    write_chip(store_b, chip, mask)
    for name in ("2023-06-03.img", "2023-06-03.json", "2023-06-03.msk"):
        a = (store_a / "chips" / "lot-a" / name).read_bytes()
        b = (store_b / "chips" / "lot-a" / name).read_bytes()
        assert a == b


def test_truncated_image_raises(tmp_path):
    rng = np.random.default_rng(2)
    chip, mask = random_chip(rng)
    write_chip(tmp_path, chip, mask)
    img = tmp_path / "chips" / "lot-a" / "2023-06-03.img"
    img.write_bytes(img.read_bytes()[:-8])
    with pytest.raises(ChipStoreError, match="bytes"):
        read_chip(tmp_path, "lot-a", date(2023, 6, 3))


def test_missing_chip_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_chip(tmp_path, "nope", date(2023, 6, 3))


def test_listing_and_stack_loading(tmp_path):
    rng = np.random.default_rng(3)
    d0 = date(2023, 6, 3)
    for i in range(3):
        chip, mask = random_chip(rng, chip_date=d0 + timedelta(days=i))
        write_chip(tmp_path, chip, mask)
    chip_b, mask_b = random_chip(rng, lot="lot-b")
    write_chip(tmp_path, chip_b, mask_b)

    assert list_lot_ids(tmp_path) == ["lot-a", "lot-b"]
    assert list_dates(tmp_path, "lot-a") == [d0, d0 + timedelta(days=1), d0 + timedelta(days=2)]
    stack = load_stack(tmp_path, "lot-a")
    assert len(stack) == 3
    assert stack.dates() == list_dates(tmp_path, "lot-a")


def test_qc_report_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    d0 = date(2023, 6, 3)
    items = []
    for i in range(2):
        chip, _ = random_chip(rng, chip_date=d0 + timedelta(days=i))
        items.append((chip, np.zeros((9, 7), dtype=np.uint8)))
    kept = LotImageStack(lot_id="lot-a", items=items)
    result = QcResult(
        kept=kept,
        rejections=[QcRejection(d0 + timedelta(days=2), RejectReason.CLOUD)],
        brightness_skipped=True,
    )
    report_path = tmp_path / "qc.ndjson"
    write_qc_report(report_path, {"lot-a": result})
    kept_dates = read_kept_dates(report_path)
    assert kept_dates == {"lot-a": [d0, d0 + timedelta(days=1)]}
    lines = report_path.read_text().strip().splitlines()
    assert len(lines) == 3
