"""Command-line pipeline: ingest, match, qc, pairs, split, train, eval, rank.

Every command reads only its declared inputs, writes only its declared
outputs, and prints a single JSON summary line to stdout (human logs go to
stderr). Exit codes: 0 success, 2 validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import date as Date
from pathlib import Path

from . import chipstore, evalrank, fetch, pipeline, synthscene, weakpairs
from .config import ConfigError, load_config, resolve
from .geodata import (
    DEFAULT_MATCH_THRESHOLD_M,
    match_all,
    match_records_ndjson,
    parking_collection_to_geojson,
    parse_parking_collection,
    parse_poi_collection,
    poi_collection_to_geojson,
)
from .imaging import DEFAULT_TV_THRESHOLD, qc_pipeline
from .ioutil import atomic_write_bytes, atomic_write_text
from .pairnet import EncoderConfig, TrainConfig, load_checkpoint, save_checkpoint
from .spatial import build_spatial_index

logger = logging.getLogger("lotrank")

CHIP_STORE_ENV = "LOTRANK_CHIP_STORE"


class ValidationError(ValueError):
    """Bad command-line inputs; maps to exit code 2."""


def _read_input(path: str | None, what: str) -> bytes:
    if path is None:
        raise ValidationError(f"missing required {what}")
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"{what} not found: {p}")
    return p.read_bytes()


def _require_dir(path: str | None, what: str) -> Path:
    if path is None:
        raise ValidationError(f"missing required {what}")
    p = Path(path)
    if not p.is_dir():
        raise ValidationError(f"{what} not found: {p}")
    return p


def _chip_store(args, config) -> Path:
    value = resolve(getattr(args, "chip_store", None), config, "chip_store", os.environ.get(CHIP_STORE_ENV))
    return _require_dir(value, "chip store")


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _load_pairs_by_lot(args, config) -> dict[str, list[Date]]:
    if getattr(args, "qc_report", None):
        report = Path(args.qc_report)
        if not report.exists():
            raise ValidationError(f"qc report not found: {report}")
        return chipstore.read_kept_dates(report)
    store = _chip_store(args, config)
    return {lot: chipstore.list_dates(store, lot) for lot in chipstore.list_lot_ids(store)}


# --- command implementations -------------------------------------------------


def cmd_ingest_poi(args, config) -> dict:
    data = _read_input(resolve(args.input, config, "poi_file", None), "POI file")
    warnings: list[str] = []
    pois = parse_poi_collection(data, warnings)
    for w in warnings:
        logger.warning("%s", w)
    atomic_write_bytes(args.output, poi_collection_to_geojson(pois))
    return {"command": "ingest-poi", "n_pois": len(pois), "n_warnings": len(warnings), "output": args.output}


def cmd_ingest_parking(args, config) -> dict:
    data = _read_input(resolve(args.input, config, "parking_file", None), "parking file")
    warnings: list[str] = []
    lots = parse_parking_collection(data, warnings)
    for w in warnings:
        logger.warning("%s", w)
    atomic_write_bytes(args.output, parking_collection_to_geojson(lots))
    return {
        "command": "ingest-parking",
        "n_lots": len(lots),
        "n_warnings": len(warnings),
        "output": args.output,
    }


def cmd_match(args, config) -> dict:
    pois = parse_poi_collection(_read_input(resolve(args.pois, config, "poi_file", None), "POI file"))
    lots = parse_parking_collection(
        _read_input(resolve(args.parking, config, "parking_file", None), "parking file")
    )
    if not lots:
        raise ValidationError("parking file contains no usable lots")
    threshold = resolve(args.threshold_m, config, "proximity_m", DEFAULT_MATCH_THRESHOLD_M)
    index = build_spatial_index(lots)
    matches = match_all(pois, index, threshold_m=threshold)
    atomic_write_text(args.output, match_records_ndjson(matches, {lot.id: lot for lot in lots}))
    return {
        "command": "match",
        "n_pois": len(pois),
        "n_lots": len(lots),
        "n_matches": len(matches),
        "threshold_m": threshold,
        "output": args.output,
    }


def cmd_qc(args, config) -> dict:
    store = _chip_store(args, config)
    lots_by_id = pipeline.load_lots(
        Path(_require_file(resolve(args.parking, config, "parking_file", None), "parking file"))
    )
    tv = resolve(args.tv_threshold, config, "tv_threshold", DEFAULT_TV_THRESHOLD)
    results = {}
    n_kept = n_rejected = n_skipped = 0
    for lot_id in chipstore.list_lot_ids(store):
        lot = lots_by_id.get(lot_id)
        if lot is None:
            logger.warning("lot %s has chips but no polygon; skipped", lot_id)
            continue
        stack = chipstore.load_stack(store, lot_id)
        result = qc_pipeline(stack, lot.geometry, tv_threshold=tv)
        results[lot_id] = result
        n_kept += len(result.kept)
        n_rejected += len(result.rejections)
        n_skipped += int(result.brightness_skipped)
    if not results:
        raise ValidationError("no lots with both chips and polygons")
    chipstore.write_qc_report(args.output, results)
    return {
        "command": "qc",
        "n_lots": len(results),
        "n_kept": n_kept,
        "n_rejected": n_rejected,
        "brightness_skipped_lots": n_skipped,
        "output": args.output,
    }


def _require_file(path: str | None, what: str) -> str:
    if path is None:
        raise ValidationError(f"missing required {what}")
    if not Path(path).exists():
        raise ValidationError(f"{what} not found: {path}")
    return path


def cmd_pairs(args, config) -> dict:
    kept = _load_pairs_by_lot(args, config)
    both_orders = not args.single_order
    labeled = []
    n_weekend = 0
    for lot_id in sorted(kept):
        if args.cross_weekend:
            lot_pairs = weakpairs.cross_weekend_pairs(lot_id, kept[lot_id], both_orders)
            labeled.extend(lot_pairs)
            n_weekend += len(lot_pairs) // (2 if both_orders else 1)
        else:
            weekends = weakpairs.enumerate_weekend_pairs(lot_id, kept[lot_id])
            n_weekend += len(weekends)
            labeled.extend(weakpairs.make_labeled_pairs(weekends, both_orders))
    weakpairs.write_pairs(args.output, labeled)
    return {
        "command": "pairs",
        "n_weekend_pairs": n_weekend,
        "n_labeled_pairs": len(labeled),
        "output": args.output,
    }


def cmd_split(args, config) -> dict:
    lots = parse_parking_collection(
        _read_input(resolve(args.parking, config, "parking_file", None), "parking file")
    )
    if not lots:
        raise ValidationError("parking file contains no usable lots")
    ratio = resolve(args.ratio, config, "ratio", weakpairs.DEFAULT_TRAIN_RATIO)
    seed = resolve(args.seed, config, "seed", 0)
    split = weakpairs.split_lots(lots, ratio=ratio, seed=seed)
    weakpairs.write_split(args.output, split)
    counts = {name: {k: len(v) for k, v in sides.items()} for name, sides in split.classes.items()}
    return {"command": "split", "seed": seed, "ratio": ratio, "classes": counts, "output": args.output}


def cmd_train(args, config) -> dict:
    store = _chip_store(args, config)
    lots_by_id = pipeline.load_lots(
        _require_file(resolve(args.parking, config, "parking_file", None), "parking file")
    )
    pairs = weakpairs.read_pairs(_require_file(args.pairs, "pairs file"))
    split = weakpairs.read_split(_require_file(args.split, "split file"))
    train_pairs, _ = pipeline.split_pairs(pairs, split)
    if not train_pairs:
        raise ValidationError("no pairs on the training side of the split")

    seed = resolve(args.seed, config, "seed", 0)
    epochs = resolve(args.epochs, config, "epochs", 10)
    encoder_config = EncoderConfig(
        bands=args.bands, side=resolve(args.side, config, "side", 64)
    )
    train_config = TrainConfig(
        learning_rate=resolve(args.learning_rate, config, "learning_rate", 1e-3),
        epochs=epochs,
        batch_size=resolve(args.batch_size, config, "batch_size", 32),
        seed=seed,
    )
    model_dir = Path(args.model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    params, history, prepared = pipeline.train_model(
        store, lots_by_id, train_pairs, encoder_config, train_config,
        log_path=model_dir / "train_log.ndjson",
    )
    save_checkpoint(params, model_dir, normalization=pipeline.normalization_dict(prepared))
    return {
        "command": "train",
        "n_train_pairs": len(train_pairs),
        "epochs": epochs,
        "final_loss": history[-1].mean_loss if history else None,
        "model_dir": str(model_dir),
    }


def cmd_eval(args, config) -> dict:
    store = _chip_store(args, config)
    lots_by_id = pipeline.load_lots(
        _require_file(resolve(args.parking, config, "parking_file", None), "parking file")
    )
    params, manifest = load_checkpoint(_require_dir(args.model_dir, "model directory"))
    normalization = manifest.get("normalization")
    if normalization is None:
        raise ValidationError("checkpoint manifest has no normalization statistics")
    pairs = weakpairs.read_pairs(_require_file(args.pairs, "pairs file"))
    split = weakpairs.read_split(_require_file(args.split, "split file"))
    _, test_by_class = pipeline.split_pairs(pairs, split)
    test_pairs = [p for group in test_by_class.values() for p in group]
    if not test_pairs:
        raise ValidationError("no pairs on the test side of the split")
    prepared = pipeline.tensors_for_pairs(store, lots_by_id, test_pairs, normalization)
    report = evalrank.evaluate_split(params, test_by_class, prepared.lookup)
    evalrank.export_report(report, args.output)
    summary = {
        "command": "eval",
        "n_test_pairs": report.overall.n_pairs,
        "overall_auc": report.overall.auc,
        "output": args.output,
    }
    for name, metrics in report.per_class.items():
        summary[f"auc_{name}"] = metrics.auc
        summary[f"accuracy_{name}"] = metrics.accuracy
    return summary


def cmd_rank(args, config) -> dict:
    store = _chip_store(args, config)
    lots_by_id = pipeline.load_lots(
        _require_file(resolve(args.parking, config, "parking_file", None), "parking file")
    )
    params, manifest = load_checkpoint(_require_dir(args.model_dir, "model directory"))
    normalization = manifest.get("normalization")
    if normalization is None:
        raise ValidationError("checkpoint manifest has no normalization statistics")
    if args.dates:
        dates = [Date.fromisoformat(d) for d in args.dates.split(",")]
    else:
        dates = chipstore.list_dates(store, args.lot)
    if len(dates) < 2:
        raise ValidationError(f"lot {args.lot} needs at least two dates to rank")
    tags = {}
    if args.tags:
        with open(_require_file(args.tags, "tags file"), "r", encoding="utf-8") as fh:
            tags = {Date.fromisoformat(k): str(v) for k, v in json.load(fh).items()}
    tensors = pipeline.tensors_for_dates(store, lots_by_id, args.lot, dates, normalization)
    ranking = evalrank.rank_dates(params, tensors, period_tags=tags)
    evalrank.export_ranking(ranking, args.output, fmt=args.format)
    return {
        "command": "rank",
        "lot": args.lot,
        "n_dates": len(ranking),
        "top_date": ranking[0].date.isoformat(),
        "output": args.output,
    }


def cmd_synth_gen(args, config) -> dict:
    seed = resolve(args.seed, config, "seed", 0)
    lots = resolve(args.lots, config, "lots_per_class", 4)
    weekends = resolve(args.weekends, config, "n_weekends", 4)
    epsilon = resolve(args.noise, config, "epsilon", 0.0)
    manifest = synthscene.gen_benchmark(args.out, lots, weekends, epsilon, seed)
    return {
        "command": "synth-gen",
        "n_lots": len(manifest["lots"]),
        "n_chips": len(manifest["chips"]),
        "seed": seed,
        "epsilon": epsilon,
        "out": args.out,
    }


def cmd_plot(args, config) -> dict:
    with open(_require_file(args.ranking, "ranking csv"), "r", encoding="utf-8") as fh:
        ranking = evalrank.parse_ranking_csv(fh.read())
    evalrank.export_ranking(ranking, args.output, fmt="svg-bars")
    return {"command": "plot", "n_entries": len(ranking), "output": args.output}


def cmd_fetch(args, config) -> dict:
    query = Path(_require_file(args.query_file, "query file")).read_text("utf-8")
    data = fetch.fetch(query, recording=args.recording, live=args.live, endpoint=args.endpoint)
    atomic_write_bytes(args.output, data)
    return {
        "command": "fetch",
        "mode": "live" if args.live else "replay",
        "bytes": len(data),
        "output": args.output,
    }


# --- argument wiring ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lotrank",
        description="Weakly-supervised parking-lot occupancy comparison pipeline.",
    )
    parser.add_argument("--config", help="flat key=value run configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-poi", help="filter a GeoJSON POI collection")
    p.add_argument("--input")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest_poi)

    p = sub.add_parser("ingest-parking", help="filter a GeoJSON parking collection")
    p.add_argument("--input")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest_parking)

    p = sub.add_parser("match", help="match POIs to nearest lots")
    p.add_argument("--pois")
    p.add_argument("--parking")
    p.add_argument("--threshold-m", type=float, dest="threshold_m")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("qc", help="run coverage/cloud/brightness filters")
    p.add_argument("--chip-store", dest="chip_store")
    p.add_argument("--parking")
    p.add_argument("--tv-threshold", type=float, dest="tv_threshold")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_qc)

    p = sub.add_parser("pairs", help="enumerate weak-labeled weekend pairs")
    p.add_argument("--qc-report", dest="qc_report")
    p.add_argument("--chip-store", dest="chip_store")
    p.add_argument("--single-order", action="store_true")
    p.add_argument("--cross-weekend", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("split", help="deterministic lot-level train/test split")
    p.add_argument("--parking")
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the pairwise comparison model")
    p.add_argument("--pairs", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--chip-store", dest="chip_store")
    p.add_argument("--parking")
    p.add_argument("--model-dir", dest="model_dir", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--seed", type=int)
    p.add_argument("--side", type=int)
    p.add_argument("--bands", type=int, default=4)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="held-out AUC/accuracy per size class")
    p.add_argument("--model-dir", dest="model_dir", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--chip-store", dest="chip_store")
    p.add_argument("--parking")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="all-pairs date ranking for one lot")
    p.add_argument("--model-dir", dest="model_dir", required=True)
    p.add_argument("--chip-store", dest="chip_store")
    p.add_argument("--parking")
    p.add_argument("--lot", required=True)
    p.add_argument("--dates", help="comma-separated ISO dates; default all stored")
    p.add_argument("--tags", help="JSON file mapping ISO date -> period tag")
    p.add_argument("--format", choices=["csv", "svg-bars"], default="csv")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("synth-gen", help="generate the synthetic benchmark dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--lots", type=int, help="lots per size class")
    p.add_argument("--weekends", type=int)
    p.add_argument("--noise", type=float, help="weak-label corruption rate epsilon")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("plot", help="render a ranking CSV as an SVG bar chart")
    p.add_argument("--ranking", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("fetch", help="record/replay Overpass fetcher (replay by default)")
    p.add_argument("--query-file", dest="query_file", required=True)
    p.add_argument("--recording", required=True)
    p.add_argument("--live", action="store_true")
    p.add_argument("--endpoint", default="https://overpass-api.de/api/interpreter")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_fetch)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        summary = args.func(args, config)
    except (ValidationError, ConfigError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return 2
    except Exception as exc:  # internal failure
        logger.exception("internal error: %s", exc)
        return 1
    _emit(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
