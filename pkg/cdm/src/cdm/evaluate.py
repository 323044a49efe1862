"""Shared evaluation: score generated designs through the design pipeline's surrogate."""

from __future__ import annotations

import numpy as np

from morphkit.evaluation import r2_micro
from morphkit.geometry import REST_ANGLES
from morphkit.surrogate import MaterialParams, surrogate_forward_batch

from .diffusion import DiffusionModel, sample_designs


def r2_micro_on_conditions(
    model: DiffusionModel,
    conditions_theta: np.ndarray,
    mat: MaterialParams | None = None,
    edge_length: float = 0.5,
    seed: int = 0,
) -> tuple[float, float]:
    """(R^2_micro, valid fraction) of generated designs on raw angle conditions.

    Designs whose closure projection fails are excluded from the score but
    reported through the valid fraction.
    """
    mat = mat or MaterialParams()
    r, h, b = sample_designs(model, conditions_theta, seed=seed)
    theta, _, valid = surrogate_forward_batch(r, h, b.astype(float), mat, edge_length)
    targets = np.asarray(conditions_theta, float) - REST_ANGLES
    actuals = theta - REST_ANGLES
    score, _ = r2_micro(targets[valid], actuals[valid])
    return score, float(valid.mean())
