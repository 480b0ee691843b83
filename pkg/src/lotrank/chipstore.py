"""On-disk chip store: raw float32 imagery, uint8 masks, JSON sidecars.

Layout, bit-exact across platforms:

    <root>/chips/<lot_id>/<YYYY-MM-DD>.img   little-endian float32, band-planar,
                                             row-major within each band
    <root>/chips/<lot_id>/<YYYY-MM-DD>.json  {lot_id, date, bands, height, width,
                                             gsd_m, geotransform, scale_applied}
    <root>/chips/<lot_id>/<YYYY-MM-DD>.msk   raw uint8 mask codes, row-major

QC reports are newline-delimited JSON {lot_id, date, kept, reason}.
"""

from __future__ import annotations

import json
from datetime import date as Date
from pathlib import Path

import numpy as np

from .imaging import GeoTransform, ImageChip, LotImageStack, QcResult, validate_mask
from .ioutil import atomic_write_bytes, dump_json, read_ndjson, write_ndjson


class ChipStoreError(ValueError):
    """Corrupt or inconsistent chip-store contents."""


def _lot_dir(root: Path | str, lot_id: str) -> Path:
    return Path(root) / "chips" / lot_id


def write_chip(
    root: Path | str, chip: ImageChip, mask: np.ndarray, scale_applied: float = 1.0
) -> None:
    if chip.capture_date is None:
        raise ValueError("cannot store a chip without a capture date")
    validate_mask(mask, chip)
    lot_dir = _lot_dir(root, chip.lot_id)
    stem = chip.capture_date.isoformat()
    gt = chip.geotransform
    sidecar = {
        "lot_id": chip.lot_id,
        "date": stem,
        "bands": chip.bands,
        "height": chip.height,
        "width": chip.width,
        "gsd_m": chip.gsd_m,
        "geotransform": [gt.origin_lon, gt.origin_lat, gt.dlon, gt.dlat],
        "scale_applied": scale_applied,
    }
    atomic_write_bytes(lot_dir / f"{stem}.img", np.ascontiguousarray(chip.pixels, dtype="<f4").tobytes())
    atomic_write_bytes(lot_dir / f"{stem}.msk", np.ascontiguousarray(mask, dtype=np.uint8).tobytes())
    atomic_write_bytes(lot_dir / f"{stem}.json", (dump_json(sidecar) + "\n").encode("utf-8"))


def read_chip(root: Path | str, lot_id: str, date: Date | str) -> tuple[ImageChip, np.ndarray]:
    lot_dir = _lot_dir(root, lot_id)
    stem = date.isoformat() if isinstance(date, Date) else str(date)
    sidecar_path = lot_dir / f"{stem}.json"
    if not sidecar_path.exists():
        raise FileNotFoundError(f"no chip for lot {lot_id} on {stem} under {root}")
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    bands, height, width = int(meta["bands"]), int(meta["height"]), int(meta["width"])

    img_bytes = (lot_dir / f"{stem}.img").read_bytes()
    expected = bands * height * width * 4
    if len(img_bytes) != expected:
        raise ChipStoreError(f"{stem}.img has {len(img_bytes)} bytes, expected {expected}")
    pixels = np.frombuffer(img_bytes, dtype="<f4").reshape(bands, height, width).copy()

    msk_bytes = (lot_dir / f"{stem}.msk").read_bytes()
    if len(msk_bytes) != height * width:
        raise ChipStoreError(f"{stem}.msk has {len(msk_bytes)} bytes, expected {height * width}")
    mask = np.frombuffer(msk_bytes, dtype=np.uint8).reshape(height, width).copy()

    gt = meta["geotransform"]
    chip = ImageChip(
        lot_id=meta["lot_id"],
        capture_date=Date.fromisoformat(meta["date"]),
        pixels=pixels,
        gsd_m=float(meta["gsd_m"]),
        geotransform=GeoTransform(float(gt[0]), float(gt[1]), float(gt[2]), float(gt[3])),
    )
    validate_mask(mask, chip)
    return chip, mask


def list_lot_ids(root: Path | str) -> list[str]:
    chips = Path(root) / "chips"
    if not chips.is_dir():
        return []
    return sorted(p.name for p in chips.iterdir() if p.is_dir())


def list_dates(root: Path | str, lot_id: str) -> list[Date]:
    lot_dir = _lot_dir(root, lot_id)
    if not lot_dir.is_dir():
        return []
    return sorted(Date.fromisoformat(p.stem) for p in lot_dir.glob("*.img"))


def load_stack(root: Path | str, lot_id: str, dates: list[Date] | None = None) -> LotImageStack:
    """Load (chip, mask) pairs for a lot, sorted by date."""
    if dates is None:
        dates = list_dates(root, lot_id)
    items = [read_chip(root, lot_id, d) for d in sorted(dates)]
    return LotImageStack(lot_id=lot_id, items=items)


def write_qc_report(path: Path | str, results: dict[str, QcResult]) -> None:
    """One NDJSON line per input image: {lot_id, date, kept, reason}."""
    records = []
    for lot_id in sorted(results):
        result = results[lot_id]
        for chip, _ in result.kept.items:
            records.append(
                {"lot_id": lot_id, "date": chip.capture_date.isoformat(), "kept": True, "reason": None}
            )
        for rej in result.rejections:
            records.append(
                {"lot_id": lot_id, "date": rej.date.isoformat(), "kept": False, "reason": rej.reason.value}
            )
    records.sort(key=lambda r: (r["lot_id"], r["date"]))
    write_ndjson(path, records)


def read_kept_dates(path: Path | str) -> dict[str, list[Date]]:
    """Kept dates per lot from a QC report."""
    kept: dict[str, list[Date]] = {}
    for record in read_ndjson(path):
        if record["kept"]:
            kept.setdefault(record["lot_id"], []).append(Date.fromisoformat(record["date"]))
    return {lot: sorted(dates) for lot, dates in kept.items()}
