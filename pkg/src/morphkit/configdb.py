"""Unit-cell configuration dataset: generation, persistence, and retrieval.

Retrieval is rotation-invariant: interior angles do not change when a cell is
rigidly rotated, so a kd-tree over angle vectors shortlists candidates, which
are then Procrustes-aligned to the query coordinates and ranked by the aligned
Euclidean residual (the dissimilarity, in mm).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from .errors import ValidationError
from .geometry import (
    CellConfig,
    DEFAULT_EDGE_LENGTH,
    REST_ANGLES,
    octagon_from_angles_batch,
    procrustes_align,  # noqa: F401  (alignment is part of the retrieval surface)
    procrustes_rotation_batch,
)
from .surrogate import (
    H_MAX,
    H_MIN,
    InfillDesign,
    MaterialParams,
    R_MAX,
    R_MIN,
    surrogate_forward_batch,
)

DATASET_COLUMNS = (
    ["id"]
    + [f"r{k}" for k in range(1, 9)]
    + [f"h{k}" for k in range(1, 9)]
    + [f"b{k}" for k in range(1, 9)]
    + [f"th{k}" for k in range(1, 9)]
)


@dataclass(frozen=True)
class ConfigRecord:
    """One dataset entry: design, deformed angles, and canonical coords."""

    id: int
    design: InfillDesign
    config: CellConfig


@dataclass
class ConfigDatabase:
    """Immutable record store with an 8-dim kd-tree over angle vectors."""

    radii: np.ndarray  # (n, 8)
    thicknesses: np.ndarray  # (n, 8)
    orientations: np.ndarray  # (n, 8)
    angles: np.ndarray  # (n, 8)
    coords: np.ndarray  # (n, 8, 2), centered
    edge_length: float = DEFAULT_EDGE_LENGTH
    _tree: cKDTree | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.angles)

    @property
    def angle_index(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.angles)
        return self._tree

    def record(self, i: int) -> ConfigRecord:
        return ConfigRecord(
            id=int(i),
            design=InfillDesign(self.radii[i], self.thicknesses[i], self.orientations[i]),
            config=CellConfig(angles=self.angles[i], coords=self.coords[i]),
        )


def sample_designs(n: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample n designs uniformly over the parameter box, reproducibly.

    Sample i is drawn from numpy's PCG64 generator seeded with the sequence
    (seed, i), so the result is independent of batching or evaluation order.
    """
    if n < 1:
        raise ValidationError("need n >= 1 designs")
    return _sample_at(seed, np.arange(n), attempt=0)


def _sample_at(seed: int, indices: np.ndarray, attempt: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = np.empty((len(indices), 8))
    h = np.empty((len(indices), 8))
    b = np.empty((len(indices), 8))
    for row, i in enumerate(indices):
        key = [seed, int(i)] if attempt == 0 else [seed, int(i), attempt]
        rng = np.random.default_rng(key)
        r[row] = rng.uniform(R_MIN, R_MAX, 8)
        h[row] = rng.uniform(H_MIN, H_MAX, 8)
        b[row] = rng.choice([-1.0, 1.0], 8)
    return r, h, b


def generate_dataset(
    n: int,
    seed: int,
    mat: MaterialParams,
    edge_length: float = DEFAULT_EDGE_LENGTH,
    max_discard_rate: float = 0.10,
) -> ConfigDatabase:
    """Generate exactly n records, resampling designs whose projection fails."""
    if n < 1:
        raise ValidationError("need n >= 1 records")
    r, h, b = sample_designs(n, seed)
    theta, coords, valid = surrogate_forward_batch(r, h, b, mat, edge_length)
    attempts, failures = n, int((~valid).sum())
    attempt = 0
    while not valid.all():
        attempt += 1
        bad = np.nonzero(~valid)[0]
        if attempt > 50:
            raise ValidationError(f"dataset generation stuck resampling {len(bad)} designs")
        r2, h2, b2 = _sample_at(seed, bad, attempt)
        t2, c2, v2 = surrogate_forward_batch(r2, h2, b2, mat, edge_length)
        r[bad], h[bad], b[bad] = r2, h2, b2
        theta[bad], coords[bad], valid[bad] = t2, c2, v2
        attempts += len(bad)
        failures += int((~v2).sum())
        if failures / attempts > max_discard_rate:
            raise ValidationError(
                f"surrogate discard rate {failures / attempts:.1%} exceeds "
                f"{max_discard_rate:.0%}: material/bound settings are mis-tuned"
            )
    return ConfigDatabase(
        radii=r,
        thicknesses=h,
        orientations=b.astype(int),
        angles=theta,
        coords=coords,
        edge_length=edge_length,
    )


def angle_envelope(db: ConfigDatabase) -> np.ndarray:
    """Per-angle (min, max) deviation from rest across the dataset, shape (8, 2)."""
    dev = db.angles - REST_ANGLES
    return np.stack([dev.min(axis=0), dev.max(axis=0)], axis=1)


def nearest_config_batch(
    db: ConfigDatabase,
    query_angles: np.ndarray,
    query_coords: np.ndarray,
    shortlist_k: int = 32,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best-aligned record per query: (record ids, rotations, dissimilarities).

    query_angles is (m, 8); query_coords is (m, 8, 2) centered. The kd-tree
    shortlists shortlist_k records per query by angle distance; each candidate
    is rotated optimally onto the query and the smallest residual wins.
    """
    if len(db) == 0:
        raise ValidationError("empty configuration database")
    k = max(1, min(int(shortlist_k), len(db)))
    _, idx = db.angle_index.query(np.asarray(query_angles, float), k=k)
    idx = np.atleast_2d(idx)
    if idx.ndim == 1:
        idx = idx[:, None]
    cand = db.coords[idx]  # (m, k, 8, 2)
    phi, resid = procrustes_rotation_batch(np.asarray(query_coords, float)[:, None], cand)
    best = resid.argmin(axis=1)
    rows = np.arange(len(idx))
    return idx[rows, best], phi[rows, best], resid[rows, best]


def nearest_config(
    db: ConfigDatabase, query: CellConfig, shortlist_k: int = 32
) -> tuple[ConfigRecord, float, float]:
    """Closest record to a query cell up to rotation; see nearest_config_batch."""
    ids, phi, resid = nearest_config_batch(
        db, query.angles[None], query.coords[None], shortlist_k
    )
    return db.record(int(ids[0])), float(phi[0]), float(resid[0])


def save_dataset_csv(db: ConfigDatabase, path_or_buf) -> None:
    """Write `id,r1..r8,h1..h8,b1..b8,th1..th8`, one record per line.

    A leading `# edge_length=` comment records the bar length. Floats use
    shortest round-trip repr, so identical databases serialize to identical
    bytes.
    """
    buf = io.StringIO()
    buf.write(f"# edge_length={db.edge_length!r}\n")
    buf.write(",".join(DATASET_COLUMNS) + "\n")
    for i in range(len(db)):
        vals = (
            [str(i)]
            + [repr(float(v)) for v in db.radii[i]]
            + [repr(float(v)) for v in db.thicknesses[i]]
            + [str(int(v)) for v in db.orientations[i]]
            + [repr(float(v)) for v in db.angles[i]]
        )
        buf.write(",".join(vals) + "\n")
    data = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(data)
    else:
        with open(path_or_buf, "w") as f:
            f.write(data)


def load_dataset_csv(path, edge_length: float | None = None) -> ConfigDatabase:
    """Load a dataset CSV; coordinates are regenerated from the stored angles.

    The bar length is read from the leading `# edge_length=` comment line;
    an explicit edge_length argument overrides it.
    """
    if edge_length is None:
        edge_length = DEFAULT_EDGE_LENGTH
        with open(path) as f:
            first = f.readline()
        if first.startswith("# edge_length="):
            edge_length = float(first.split("=", 1)[1])
    df = pd.read_csv(path, float_precision="round_trip", comment="#")
    missing = [c for c in DATASET_COLUMNS if c not in df.columns]
    if missing:
        raise ValidationError(f"dataset file missing columns: {missing}")
    r = df[[f"r{k}" for k in range(1, 9)]].to_numpy(float)
    h = df[[f"h{k}" for k in range(1, 9)]].to_numpy(float)
    b = df[[f"b{k}" for k in range(1, 9)]].to_numpy(int)
    theta = df[[f"th{k}" for k in range(1, 9)]].to_numpy(float)
    coords, residual = octagon_from_angles_batch(theta, edge_length)
    if residual.max() > 1e-6:
        raise ValidationError(
            f"dataset contains non-closing angle rows (max residual {residual.max():.2e} mm)"
        )
    return ConfigDatabase(
        radii=r,
        thicknesses=h,
        orientations=b,
        angles=theta,
        coords=coords,
        edge_length=edge_length,
    )


def verify_dataset(db: ConfigDatabase, mat: MaterialParams, sample: int = 100, seed: int = 0) -> float:
    """Recompute stored angles for a sampled subset; returns max abs deviation."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(db), size=min(sample, len(db)), replace=False)
    theta, _, _ = surrogate_forward_batch(
        db.radii[idx], db.thicknesses[idx], db.orientations[idx], mat, db.edge_length
    )
    return float(np.abs(theta - db.angles[idx]).max())
