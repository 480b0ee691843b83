"""The pairwise comparison model: shared encoder, feature difference, MLP head.

One encoder parameter set serves both branches (weight sharing is structural:
the same arrays are used for either input). The head maps the 128-dim feature
difference through a hidden tanh layer to a single logit; a sigmoid turns the
logit into the probability that the first image shows the fuller lot.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..rng import SplitMix64, derive_seed
from .layers import (
    conv2d_backward,
    conv2d_forward,
    global_avgpool_backward,
    global_avgpool_forward,
    linear_backward,
    linear_forward,
    tanh_backward,
    tanh_forward,
)

EMBEDDING_DIM = 128
LOGIT_CLAMP = 30.0
_INIT_STREAM_SALT = 0


@dataclass(frozen=True)
class EncoderConfig:
    bands: int = 4
    side: int = 64
    conv_channels: tuple[int, ...] = (16, 32, 64, 128)
    kernel: int = 3
    stride: int = 2
    embedding_dim: int = EMBEDDING_DIM
    head_hidden: int = 64

    def __post_init__(self):
        if self.embedding_dim != EMBEDDING_DIM:
            raise ValueError(f"embedding_dim is fixed at {EMBEDDING_DIM}")
        if self.conv_channels[-1] != self.embedding_dim:
            raise ValueError("last conv channel count must equal embedding_dim")
        if self.side < 2 ** len(self.conv_channels):
            raise ValueError(
                f"side {self.side} too small for {len(self.conv_channels)} stride-{self.stride} blocks"
            )

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["conv_channels"] = list(self.conv_channels)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "EncoderConfig":
        doc = dict(doc)
        doc["conv_channels"] = tuple(doc["conv_channels"])
        return cls(**doc)


def param_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    """Tensor name -> shape, in checkpoint manifest order."""
    shapes: dict[str, tuple[int, ...]] = {}
    in_c = config.bands
    for i, out_c in enumerate(config.conv_channels):
        shapes[f"conv{i}.w"] = (out_c, in_c, config.kernel, config.kernel)
        shapes[f"conv{i}.b"] = (out_c,)
        in_c = out_c
    shapes["head0.w"] = (config.head_hidden, config.embedding_dim)
    shapes["head0.b"] = (config.head_hidden,)
    shapes["head1.w"] = (1, config.head_hidden)
    shapes["head1.b"] = (1,)
    return shapes


@dataclass
class PairNetParams:
    config: EncoderConfig
    tensors: dict[str, np.ndarray]
    seed: int = 0

    def conv_layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [
            (self.tensors[f"conv{i}.w"], self.tensors[f"conv{i}.b"])
            for i in range(len(self.config.conv_channels))
        ]

    def astype(self, dtype) -> "PairNetParams":
        return PairNetParams(
            config=self.config,
            tensors={k: v.astype(dtype) for k, v in self.tensors.items()},
            seed=self.seed,
        )


def init_params(config: EncoderConfig, seed: int = 0) -> PairNetParams:
    """Kaiming-uniform weights (bound sqrt(6/fan_in)) from the seeded stream; zero biases."""
    rng = SplitMix64(derive_seed(seed, _INIT_STREAM_SALT))
    tensors: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        if name.endswith(".b"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = math.sqrt(6.0 / fan_in)
            u = rng.uniform_array(int(np.prod(shape)))
            tensors[name] = ((2.0 * u - 1.0) * bound).astype(np.float32).reshape(shape)
    return PairNetParams(config=config, tensors=tensors, seed=seed)


def encoder_forward(params: PairNetParams, x: np.ndarray, want_cache: bool = False):
    """x: (N, bands, side, side) -> (N, embedding_dim) plus caches for backprop."""
    config = params.config
    caches = [] if want_cache else None
    h = x
    for w, b in params.conv_layers():
        h, conv_cache = conv2d_forward(h, w, b, stride=config.stride, pad=config.kernel // 2)
        h, act_cache = tanh_forward(h)
        if want_cache:
            caches.append((conv_cache, act_cache))
    emb, pool_cache = global_avgpool_forward(h)
    if want_cache:
        caches.append(pool_cache)
    return emb, caches


def encoder_backward(params: PairNetParams, demb: np.ndarray, caches) -> dict[str, np.ndarray]:
    grads: dict[str, np.ndarray] = {}
    dh = global_avgpool_backward(demb, caches[-1])
    for i in reversed(range(len(params.config.conv_channels))):
        conv_cache, act_cache = caches[i]
        dh = tanh_backward(dh, act_cache)
        dh, dw, db = conv2d_backward(dh, conv_cache)
        grads[f"conv{i}.w"] = dw
        grads[f"conv{i}.b"] = db
    return grads


def head_forward(params: PairNetParams, diff: np.ndarray, want_cache: bool = False):
    """diff: (N, embedding_dim) -> clamped logits (N,)."""
    t = params.tensors
    z1, lin1_cache = linear_forward(diff, t["head0.w"], t["head0.b"])
    h1, tanh_cache = tanh_forward(z1)
    z2, lin2_cache = linear_forward(h1, t["head1.w"], t["head1.b"])
    logits = np.clip(z2[:, 0], -LOGIT_CLAMP, LOGIT_CLAMP)
    clamp_mask = np.abs(z2[:, 0]) < LOGIT_CLAMP
    cache = (lin1_cache, tanh_cache, lin2_cache, clamp_mask) if want_cache else None
    return logits, cache


def head_backward(params: PairNetParams, dlogits: np.ndarray, cache):
    lin1_cache, tanh_cache, lin2_cache, clamp_mask = cache
    dz2 = (dlogits * clamp_mask)[:, None]
    dh1, dw2, db2 = linear_backward(dz2, lin2_cache)
    dz1 = tanh_backward(dh1, tanh_cache)
    ddiff, dw1, db1 = linear_backward(dz1, lin1_cache)
    grads = {"head0.w": dw1, "head0.b": db1, "head1.w": dw2, "head1.b": db2}
    return ddiff, grads


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def pair_logits(params: PairNetParams, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Clamped logits for batched prepared pairs a, b of shape (N, bands, S, S)."""
    both = np.concatenate([a, b], axis=0)
    emb, _ = encoder_forward(params, both)
    n = a.shape[0]
    logits, _ = head_forward(params, emb[:n] - emb[n:])
    return logits


def score_batch(params: PairNetParams, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Probabilities (float64) that each `a` chip shows higher occupancy than `b`."""
    return _sigmoid(pair_logits(params, a, b).astype(np.float64))


def score_pair(params: PairNetParams, a: np.ndarray, b: np.ndarray) -> float:
    """Single-pair probability; inputs are prepared (bands, S, S) tensors."""
    return float(score_batch(params, a[None], b[None])[0])


def symmetrized_score(params: PairNetParams, a: np.ndarray, b: np.ndarray) -> float:
    """Order-free probability: (p(a,b) + 1 - p(b,a)) / 2."""
    forward = score_pair(params, a, b)
    backward = score_pair(params, b, a)
    return 0.5 * (forward + 1.0 - backward)


def predict_label(p: float, threshold: float = 0.5) -> int:
    """Class 1 iff p strictly exceeds the threshold."""
    return int(p > threshold)


def bce_loss(p: float, label: int) -> float:
    """Binary cross-entropy of probability p against a {0,1} label, via logits."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    z = math.log(p) - math.log1p(-p)
    return max(z, 0.0) - z * label + math.log1p(math.exp(-abs(z)))


def _bce_from_logits(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return np.maximum(logits, 0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))


def pair_grad(params: PairNetParams, a: np.ndarray, b: np.ndarray, labels: np.ndarray):
    """Mean BCE over the batch and exact gradients for every parameter.

    Both branches run through the single shared encoder, so encoder gradients
    accumulate the two contributions by construction.
    """
    if a.shape[0] == 0:
        raise ValueError("empty batch")
    n = a.shape[0]
    both = np.concatenate([a, b], axis=0)
    emb, enc_caches = encoder_forward(params, both, want_cache=True)
    diff = emb[:n] - emb[n:]
    logits, head_cache = head_forward(params, diff, want_cache=True)
    labels = np.asarray(labels, dtype=logits.dtype)
    loss = float(_bce_from_logits(logits.astype(np.float64), labels.astype(np.float64)).mean())

    dlogits = (_sigmoid(logits) - labels) / n
    ddiff, grads = head_backward(params, dlogits, head_cache)
    demb = np.concatenate([ddiff, -ddiff], axis=0)
    grads.update(encoder_backward(params, demb, enc_caches))
    return loss, grads
