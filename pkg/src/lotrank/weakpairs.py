"""Saturday/Sunday weak labels and deterministic lot-level train/test splits.

A weekend pair is a QC-surviving Saturday and the very next day; the weak
label says the Saturday image shows the fuller lot. Splits shuffle each size
class with a splitmix64-driven Fisher-Yates over lexicographically sorted
lot ids, so the same seed always yields the same split.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

from .geodata import SizeClass
from .ioutil import atomic_write_text, read_ndjson, write_ndjson
from .rng import SplitMix64

logger = logging.getLogger(__name__)

SATURDAY = 5  # datetime.date.weekday()
DEFAULT_TRAIN_RATIO = 0.8

# Per-class shuffles consume one shared stream in this fixed order.
_CLASS_ORDER = (SizeClass.LARGE, SizeClass.MEDIUM, SizeClass.SMALL)


@dataclass(frozen=True)
class WeekendPair:
    lot_id: str
    sat_date: Date
    sun_date: Date

    def __post_init__(self):
        if self.sat_date.weekday() != SATURDAY:
            raise ValueError(f"{self.sat_date} is not a Saturday")
        if self.sun_date != self.sat_date + timedelta(days=1):
            raise ValueError(f"{self.sun_date} is not the Sunday after {self.sat_date}")


@dataclass(frozen=True)
class LabeledPair:
    lot_id: str
    date_a: Date
    date_b: Date
    label: int

    def __post_init__(self):
        if self.date_a == self.date_b:
            raise ValueError("pair dates must differ")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass
class SplitSpec:
    seed: int
    ratio: float
    classes: dict[str, dict[str, list[str]]] = field(default_factory=dict)

    @property
    def train_lot_ids(self) -> set[str]:
        return {lot for split in self.classes.values() for lot in split["train"]}

    @property
    def test_lot_ids(self) -> set[str]:
        return {lot for split in self.classes.values() for lot in split["test"]}

    def to_json(self) -> str:
        return json.dumps(
            {"seed": self.seed, "ratio": self.ratio, "classes": self.classes},
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitSpec":
        doc = json.loads(text)
        return cls(seed=int(doc["seed"]), ratio=float(doc["ratio"]), classes=doc["classes"])


def enumerate_weekend_pairs(lot_id: str, kept_dates) -> list[WeekendPair]:
    """(Saturday, next-day Sunday) pairs among the QC-surviving dates, date order."""
    available = set(kept_dates)
    pairs = []
    for d in sorted(available):
        if d.weekday() == SATURDAY and d + timedelta(days=1) in available:
            pairs.append(WeekendPair(lot_id=lot_id, sat_date=d, sun_date=d + timedelta(days=1)))
    return pairs


def make_labeled_pairs(weekend_pairs, include_both_orders: bool = True) -> list[LabeledPair]:
    """Label 1 for (Saturday, Sunday); optionally also emit the reversed pair as 0."""
    out = []
    for pair in weekend_pairs:
        out.append(LabeledPair(pair.lot_id, pair.sat_date, pair.sun_date, 1))
        if include_both_orders:
            out.append(LabeledPair(pair.lot_id, pair.sun_date, pair.sat_date, 0))
    return out


def cross_weekend_pairs(lot_id: str, kept_dates, include_both_orders: bool = True) -> list[LabeledPair]:
    """All Saturday x Sunday products regardless of weekend (ablation mode)."""
    dates = sorted(set(kept_dates))
    saturdays = [d for d in dates if d.weekday() == SATURDAY]
    sundays = [d for d in dates if d.weekday() == SATURDAY + 1]
    out = []
    for sat in saturdays:
        for sun in sundays:
            out.append(LabeledPair(lot_id, sat, sun, 1))
            if include_both_orders:
                out.append(LabeledPair(lot_id, sun, sat, 0))
    return out


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def split_lots(lots, ratio: float = DEFAULT_TRAIN_RATIO, seed: int = 0) -> SplitSpec:
    """Stratified lot-level split: per size class, shuffle and hold out 1-ratio.

    Lot ids are sorted, shuffled by a seeded Fisher-Yates, and the first
    round((1-ratio)*n) ids (at least 1 when the class has >= 2 lots) form the
    test side. A single-lot class goes entirely to train with a warning.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    by_class: dict[SizeClass, list[str]] = {}
    for lot in lots:
        by_class.setdefault(lot.size_class, []).append(lot.id)

    rng = SplitMix64(seed)
    classes: dict[str, dict[str, list[str]]] = {}
    for size_class in _CLASS_ORDER:
        ids = by_class.get(size_class)
        if not ids:
            continue
        ids = sorted(ids)
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate lot ids in class {size_class.value}")
        if len(ids) == 1:
            logger.warning("size class %s has a single lot; assigning it to train", size_class.value)
            classes[size_class.value] = {"train": ids, "test": []}
            continue
        rng.shuffle(ids)
        n_test = _round_half_up((1.0 - ratio) * len(ids))
        n_test = min(max(n_test, 1), len(ids) - 1)
        classes[size_class.value] = {"train": sorted(ids[n_test:]), "test": sorted(ids[:n_test])}
    return SplitSpec(seed=seed, ratio=ratio, classes=classes)


def write_pairs(path: Path | str, pairs: list[LabeledPair]) -> None:
    write_ndjson(
        path,
        [
            {
                "lot_id": p.lot_id,
                "date_a": p.date_a.isoformat(),
                "date_b": p.date_b.isoformat(),
                "label": p.label,
            }
            for p in pairs
        ],
    )


def read_pairs(path: Path | str) -> list[LabeledPair]:
    return [
        LabeledPair(
            lot_id=r["lot_id"],
            date_a=Date.fromisoformat(r["date_a"]),
            date_b=Date.fromisoformat(r["date_b"]),
            label=int(r["label"]),
        )
        for r in read_ndjson(path)
    ]


def write_split(path: Path | str, split: SplitSpec) -> None:
    atomic_write_text(path, split.to_json() + "\n")


def read_split(path: Path | str) -> SplitSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return SplitSpec.from_json(fh.read())
