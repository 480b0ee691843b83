"""Adam training loop over weak-labeled pairs, deterministic given a seed.

The seed fixes both parameter initialization (init stream) and the per-epoch
batch order (a separate derived stream). Within a batch, pairs are processed
in ascending pair index so the loss reduction order never varies.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..ioutil import dump_json
from ..rng import SplitMix64, derive_seed
from .model import PairNetParams, pair_grad

_SHUFFLE_STREAM_SALT = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs < 0:
            raise ValueError("hyperparameters must be positive (epochs may be 0)")


@dataclass
class TrainingSet:
    """Prepared input tensors plus (a index, b index, label) pair triples."""

    tensors: np.ndarray  # (M, bands, side, side) float32
    pairs: list[tuple[int, int, int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    wall_ms: float


class _Adam:
    def __init__(self, params: PairNetParams, config: TrainConfig):
        self.config = config
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}

    def step(self, params: PairNetParams, grads: dict[str, np.ndarray]) -> None:
        c = self.config
        self.t += 1
        bias1 = 1.0 - c.beta1**self.t
        bias2 = 1.0 - c.beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            params.tensors[name] -= c.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + c.eps)


def train(
    params: PairNetParams,
    training_set: TrainingSet,
    config: TrainConfig,
    log_path=None,
) -> tuple[PairNetParams, list[EpochStats]]:
    """Optimize params in place; returns (params, per-epoch history)."""
    if len(training_set) == 0:
        raise ValueError("empty training set")
    rng = SplitMix64(derive_seed(config.seed, _SHUFFLE_STREAM_SALT))
    adam = _Adam(params, config)
    history: list[EpochStats] = []
    n = len(training_set)
    log_lines: list[str] = []

    for epoch in range(config.epochs):
        started = time.perf_counter()
        order = list(range(n))
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = sorted(order[start : start + config.batch_size])
            ia = [training_set.pairs[i][0] for i in batch]
            ib = [training_set.pairs[i][1] for i in batch]
            labels = np.array([training_set.pairs[i][2] for i in batch], dtype=np.float32)
            loss, grads = pair_grad(params, training_set.tensors[ia], training_set.tensors[ib], labels)
            adam.step(params, grads)
            epoch_loss += loss * len(batch)
        wall_ms = (time.perf_counter() - started) * 1000.0
        stats = EpochStats(epoch=epoch, mean_loss=epoch_loss / n, wall_ms=wall_ms)
        history.append(stats)
        log_lines.append(
            dump_json({"epoch": stats.epoch, "mean_loss": stats.mean_loss, "wall_ms": stats.wall_ms})
        )

    if log_path is not None:
        from ..ioutil import atomic_write_text

        atomic_write_text(log_path, "".join(line + "\n" for line in log_lines))
    return params, history
