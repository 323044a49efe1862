"""Dataset loading, design-vector normalization, and the fixed 8:2 split.

The design vector x concatenates the 8 fillet radii, 8 layer thicknesses, and
8 orientation signs. Radii and thicknesses are affinely mapped to [-1, 1]
using the parameter bounds; orientation bits are already in {-1, +1} and are
treated as continuously relaxed coordinates. Conditions are the 8 interior
angles minus the rest angles, standardized by the training-set deviation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from morphkit.configdb import load_dataset_csv
from morphkit.geometry import REST_ANGLES
from morphkit.surrogate import H_MAX, H_MIN, R_MAX, R_MIN

X_DIM = 24
COND_DIM = 8

_R_MID, _R_HALF = (R_MIN + R_MAX) / 2, (R_MAX - R_MIN) / 2
_H_MID, _H_HALF = (H_MIN + H_MAX) / 2, (H_MAX - H_MIN) / 2


@dataclass
class NormStats:
    cond_scale: np.ndarray  # (8,) per-angle std of the training conditions

    def to_dict(self) -> dict:
        return {"cond_scale": self.cond_scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(cond_scale=np.asarray(d["cond_scale"], float))


def encode_designs(r: np.ndarray, h: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(n, 24) design vectors in [-1, 1]."""
    return np.concatenate(
        [(r - _R_MID) / _R_HALF, (h - _H_MID) / _H_HALF, np.asarray(b, float)], axis=1
    )


def decode_designs(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of encode_designs with clamping and orientation sign snapping."""
    x = np.asarray(x, float)
    r = np.clip(x[:, :8] * _R_HALF + _R_MID, R_MIN, R_MAX)
    h = np.clip(x[:, 8:16] * _H_HALF + _H_MID, H_MIN, H_MAX)
    b = np.where(x[:, 16:24] >= 0.0, 1, -1)  # 0 maps to +1
    return r, h, b


def encode_conditions(theta: np.ndarray, stats: NormStats) -> np.ndarray:
    return (np.asarray(theta, float) - REST_ANGLES) / stats.cond_scale


def load_training_arrays(
    dataset_path, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, NormStats]:
    """(x_train, cond_train, x_test, cond_test, stats) with the fixed 8:2 split."""
    db = load_dataset_csv(dataset_path)
    if len(db) < 1000:
        raise ValueError(f"need at least 1000 records, got {len(db)}")
    x = encode_designs(db.radii, db.thicknesses, db.orientations)
    dev = db.angles - REST_ANGLES
    perm = np.random.default_rng(seed).permutation(len(db))
    n_train = int(round(0.8 * len(db)))
    tr, te = perm[:n_train], perm[n_train:]
    stats = NormStats(cond_scale=dev[tr].std(axis=0))
    cond = dev / stats.cond_scale
    return x[tr], cond[tr], x[te], cond[te], stats
