"""Checkpoint format: raw little-endian float32 weights plus a JSON manifest.

model.bin holds every tensor's bytes concatenated in manifest order;
model.json records the config, tensor names/shapes/offsets, the seed, and
optional normalization statistics. Save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..ioutil import atomic_write_bytes, atomic_write_text
from .model import EncoderConfig, PairNetParams, param_shapes

WEIGHTS_NAME = "model.bin"
MANIFEST_NAME = "model.json"


class CheckpointError(ValueError):
    """Corrupt or inconsistent checkpoint contents."""


def save_checkpoint(params: PairNetParams, directory: Path | str, normalization: dict | None = None) -> None:
    directory = Path(directory)
    entries = []
    blobs = []
    offset = 0
    for name in param_shapes(params.config):
        tensor = params.tensors[name]
        data = np.ascontiguousarray(tensor, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(tensor.shape), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    manifest = {
        "format": "lotrank-checkpoint",
        "version": 1,
        "seed": params.seed,
        "config": params.config.to_dict(),
        "tensors": entries,
    }
    if normalization is not None:
        manifest["normalization"] = normalization
    atomic_write_bytes(directory / WEIGHTS_NAME, b"".join(blobs))
    atomic_write_text(directory / MANIFEST_NAME, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def load_checkpoint(directory: Path | str) -> tuple[PairNetParams, dict]:
    """Returns (params, manifest). Validates shapes and file size before reading."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no checkpoint manifest at {manifest_path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    config = EncoderConfig.from_dict(manifest["config"])

    expected = param_shapes(config)
    entries = {e["name"]: e for e in manifest["tensors"]}
    if set(entries) != set(expected):
        missing = sorted(set(expected) ^ set(entries))
        raise CheckpointError(f"manifest tensor set mismatch around {missing}")
    for name, shape in expected.items():
        if tuple(entries[name]["shape"]) != shape:
            raise CheckpointError(
                f"tensor {name}: manifest shape {entries[name]['shape']} != expected {list(shape)}"
            )

    blob = (directory / WEIGHTS_NAME).read_bytes()
    total = sum(e["nbytes"] for e in manifest["tensors"])
    if len(blob) != total:
        raise CheckpointError(f"{WEIGHTS_NAME} has {len(blob)} bytes, manifest expects {total}")

    tensors = {}
    for entry in manifest["tensors"]:
        start = entry["offset"]
        end = start + entry["nbytes"]
        tensors[entry["name"]] = (
            np.frombuffer(blob[start:end], dtype="<f4").reshape(tuple(entry["shape"])).copy()
        )
    return PairNetParams(config=config, tensors=tensors, seed=int(manifest.get("seed", 0))), manifest
