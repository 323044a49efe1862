"""Conditional diffusion model over unit-cell infill design vectors."""

from .data import (
    COND_DIM,
    X_DIM,
    NormStats,
    decode_designs,
    encode_conditions,
    encode_designs,
    load_training_arrays,
)
from .diffusion import (
    DiffusionConfig,
    DiffusionModel,
    TrainResult,
    sample,
    sample_designs,
    train,
)
from .evaluate import r2_micro_on_conditions
from .model import Denoiser, SinusoidalEmbedding
from .schedule import Schedule, linear_betas

__all__ = [
    "COND_DIM",
    "X_DIM",
    "NormStats",
    "decode_designs",
    "encode_conditions",
    "encode_designs",
    "load_training_arrays",
    "DiffusionConfig",
    "DiffusionModel",
    "TrainResult",
    "sample",
    "sample_designs",
    "train",
    "r2_micro_on_conditions",
    "Denoiser",
    "SinusoidalEmbedding",
    "Schedule",
    "linear_betas",
]
