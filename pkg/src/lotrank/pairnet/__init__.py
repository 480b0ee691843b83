"""Pairwise occupancy-comparison model: shared encoder, difference head, training."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .inputs import DEFAULT_SIDE, bilinear_resize, footprint_bbox, prepare_input
from .model import (
    EMBEDDING_DIM,
    EncoderConfig,
    PairNetParams,
    bce_loss,
    encoder_forward,
    init_params,
    pair_grad,
    pair_logits,
    param_shapes,
    predict_label,
    score_batch,
    score_pair,
    symmetrized_score,
)
from .train import EpochStats, TrainConfig, TrainingSet, train

__all__ = [
    "CheckpointError",
    "DEFAULT_SIDE",
    "EMBEDDING_DIM",
    "EncoderConfig",
    "EpochStats",
    "PairNetParams",
    "TrainConfig",
    "TrainingSet",
    "bce_loss",
    "bilinear_resize",
    "encoder_forward",
    "footprint_bbox",
    "init_params",
    "load_checkpoint",
    "pair_grad",
    "pair_logits",
    "param_shapes",
    "predict_label",
    "prepare_input",
    "save_checkpoint",
    "score_batch",
    "score_pair",
    "symmetrized_score",
    "train",
]
