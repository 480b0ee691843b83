"""Dataset assembly shared by the CLI commands and the end-to-end benchmark.

Bridges the chip store, lot polygons, and weak-labeled pairs into prepared
model tensors: rasterize each lot's footprint once, compute normalization
statistics over training footprint pixels, and turn every referenced
(lot, date) chip into a fixed-size input tensor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

import numpy as np

from . import chipstore
from .geodata import ParkingLot, parse_parking_collection
from .imaging import normalize_chip, rasterize_footprint
from .pairnet import (
    DEFAULT_SIDE,
    EncoderConfig,
    PairNetParams,
    TrainConfig,
    TrainingSet,
    init_params,
    prepare_input,
    train,
)
from .weakpairs import LabeledPair, SplitSpec

logger = logging.getLogger(__name__)

ChipRef = tuple[str, Date]


def load_lots(parking_file: Path | str) -> dict[str, ParkingLot]:
    with open(parking_file, "rb") as fh:
        lots = parse_parking_collection(fh.read())
    return {lot.id: lot for lot in lots}


def chip_refs_from_pairs(pairs: list[LabeledPair]) -> list[ChipRef]:
    refs = {(p.lot_id, p.date_a) for p in pairs} | {(p.lot_id, p.date_b) for p in pairs}
    return sorted(refs)


class FootprintCache:
    """Rasterized footprint per lot; chips of one lot share their grid."""

    def __init__(self, store_root: Path | str, lots_by_id: dict[str, ParkingLot]):
        self.store_root = store_root
        self.lots_by_id = lots_by_id
        self._cache: dict[str, np.ndarray] = {}

    def get(self, lot_id: str, chip=None) -> np.ndarray:
        if lot_id not in self._cache:
            if chip is None:
                dates = chipstore.list_dates(self.store_root, lot_id)
                if not dates:
                    raise ValueError(f"no stored chips for lot {lot_id}")
                chip, _ = chipstore.read_chip(self.store_root, lot_id, dates[0])
            lot = self.lots_by_id.get(lot_id)
            if lot is None:
                raise ValueError(f"lot {lot_id} missing from the parking collection")
            self._cache[lot_id] = rasterize_footprint(
                lot.geometry, chip.geotransform, chip.height, chip.width
            )
        return self._cache[lot_id]


def compute_normalization(
    store_root: Path | str, footprints: FootprintCache, refs: list[ChipRef]
) -> tuple[np.ndarray, np.ndarray]:
    """Per-band mean/std over footprint pixels of the referenced (training) chips."""
    total = total_sq = None
    count = 0
    for lot_id, date in refs:
        chip, _ = chipstore.read_chip(store_root, lot_id, date)
        values = chip.pixels[:, footprints.get(lot_id, chip)].astype(np.float64)
        if total is None:
            total = values.sum(axis=1)
            total_sq = (values**2).sum(axis=1)
        else:
            total += values.sum(axis=1)
            total_sq += (values**2).sum(axis=1)
        count += values.shape[1]
    if count == 0:
        raise ValueError("no training pixels to normalize from")
    means = total / count
    stds = np.sqrt(np.maximum(total_sq / count - means**2, 1e-12))
    return means, stds


@dataclass
class PreparedTensors:
    side: int
    band_means: np.ndarray
    band_stds: np.ndarray
    tensors: dict[ChipRef, np.ndarray] = field(default_factory=dict)

    def lookup(self, lot_id: str, date: Date) -> np.ndarray:
        return self.tensors[(lot_id, date)]


def prepare_tensors(
    store_root: Path | str,
    footprints: FootprintCache,
    refs: list[ChipRef],
    band_means: np.ndarray,
    band_stds: np.ndarray,
    side: int = DEFAULT_SIDE,
) -> PreparedTensors:
    prepared = PreparedTensors(side=side, band_means=band_means, band_stds=band_stds)
    for lot_id, date in refs:
        chip, _ = chipstore.read_chip(store_root, lot_id, date)
        normalized = normalize_chip(chip, band_means, band_stds)
        prepared.tensors[(lot_id, date)] = prepare_input(
            normalized, footprints.get(lot_id, chip), side=side
        )
    return prepared


def build_training_set(prepared: PreparedTensors, pairs: list[LabeledPair]) -> TrainingSet:
    refs = sorted(prepared.tensors)
    index = {ref: i for i, ref in enumerate(refs)}
    tensors = np.stack([prepared.tensors[ref] for ref in refs])
    triples = [(index[(p.lot_id, p.date_a)], index[(p.lot_id, p.date_b)], p.label) for p in pairs]
    return TrainingSet(tensors=tensors, pairs=triples)


def normalization_dict(prepared: PreparedTensors) -> dict:
    return {
        "band_means": [float(x) for x in prepared.band_means],
        "band_stds": [float(x) for x in prepared.band_stds],
        "side": prepared.side,
    }


def train_model(
    store_root: Path | str,
    lots_by_id: dict[str, ParkingLot],
    train_pairs: list[LabeledPair],
    encoder_config: EncoderConfig,
    train_config: TrainConfig,
    log_path: Path | str | None = None,
) -> tuple[PairNetParams, list, PreparedTensors]:
    """Training entry point: normalization, tensor prep, init, Adam epochs."""
    if not train_pairs:
        raise ValueError("no training pairs")
    footprints = FootprintCache(store_root, lots_by_id)
    refs = chip_refs_from_pairs(train_pairs)
    means, stds = compute_normalization(store_root, footprints, refs)
    prepared = prepare_tensors(store_root, footprints, refs, means, stds, side=encoder_config.side)
    training_set = build_training_set(prepared, train_pairs)
    params = init_params(encoder_config, seed=train_config.seed)
    params, history = train(params, training_set, train_config, log_path=log_path)
    return params, history, prepared


def split_pairs(
    pairs: list[LabeledPair], split: SplitSpec
) -> tuple[list[LabeledPair], dict[str, list[LabeledPair]]]:
    """(train pairs, test pairs grouped by size class name)."""
    train_ids = split.train_lot_ids
    by_class: dict[str, list[LabeledPair]] = {}
    class_of = {
        lot_id: name for name, sides in split.classes.items() for lot_id in sides["test"]
    }
    train_side = [p for p in pairs if p.lot_id in train_ids]
    for p in pairs:
        name = class_of.get(p.lot_id)
        if name is not None:
            by_class.setdefault(name, []).append(p)
    return train_side, by_class


def tensors_for_pairs(
    store_root: Path | str,
    lots_by_id: dict[str, ParkingLot],
    pairs: list[LabeledPair],
    normalization: dict,
) -> PreparedTensors:
    """Prepare tensors for evaluation using stored training statistics."""
    footprints = FootprintCache(store_root, lots_by_id)
    return prepare_tensors(
        store_root,
        footprints,
        chip_refs_from_pairs(pairs),
        np.asarray(normalization["band_means"], dtype=np.float64),
        np.asarray(normalization["band_stds"], dtype=np.float64),
        side=int(normalization["side"]),
    )


def tensors_for_dates(
    store_root: Path | str,
    lots_by_id: dict[str, ParkingLot],
    lot_id: str,
    dates: list[Date],
    normalization: dict,
) -> dict[Date, np.ndarray]:
    footprints = FootprintCache(store_root, lots_by_id)
    prepared = prepare_tensors(
        store_root,
        footprints,
        [(lot_id, d) for d in sorted(set(dates))],
        np.asarray(normalization["band_means"], dtype=np.float64),
        np.asarray(normalization["band_stds"], dtype=np.float64),
        side=int(normalization["side"]),
    )
    return {date: tensor for (_, date), tensor in prepared.tensors.items()}
