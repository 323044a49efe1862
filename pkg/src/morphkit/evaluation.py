"""Assembly verification and performance metrics.

assemble_evaluate reconstructs the deformed shape that the chosen cell
designs, assembled, would reach: the ConLME machinery is run with targets
only on the fixed (zero-displacement) vertices while the consistency term
tracks each cell's achieved configuration with per-iteration rotation
re-estimation. The metric set mirrors standard inverse-design reporting:
handle MAE, MRE (normalized by the largest target displacement), and averaged
per-dimension R^2 at both scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .configdb import ConfigDatabase, nearest_config_batch
from .conlme import (
    SolverWeights,
    assemble_consistency,
    assemble_laplacian,
    assemble_system,
    assemble_rhs,
    energy_terms,
)
from .errors import DivergenceError, ValidationError
from .geometry import (
    REST_ANGLES,
    cell_area_batch,
    interior_angles_batch,
    procrustes_rotation_batch,
    rotate_batch,
)
from .mesh import LinkageMesh, edge_lengths
from .microscale import CellAssignment

EVAL_WEIGHTS = SolverWeights(w_L=1e-3, w_S=1.0, w_t=1e4)


@dataclass
class EvaluationReport:
    mae: float
    mre: float | None  # None when L_c == 0
    r2_macro: float | None
    r2_micro: float | None
    L_c: float
    dissimilarity: np.ndarray  # per cell, mm
    edge_deviation: np.ndarray  # per edge, mm
    area_change: np.ndarray  # per cell, mm^2
    total_area_change: float  # signed fraction of the initial occupied area
    positions: np.ndarray  # deformed vertex table (N, 2)
    r2_macro_skipped: list[int] = field(default_factory=list)
    r2_micro_skipped: list[int] = field(default_factory=list)

    def scalars(self) -> dict:
        return {
            "mae_mm": self.mae,
            "mre": self.mre,
            "r2_macro": self.r2_macro,
            "r2_micro": self.r2_micro,
            "L_c_mm": self.L_c,
            "max_dissimilarity_mm": float(self.dissimilarity.max()) if len(self.dissimilarity) else 0.0,
            "max_edge_deviation_mm": float(self.edge_deviation.max()) if len(self.edge_deviation) else 0.0,
            "total_area_change_fraction": self.total_area_change,
            "r2_macro_skipped_dims": self.r2_macro_skipped,
            "r2_micro_skipped_dims": self.r2_micro_skipped,
        }


def assemble_evaluate(
    mesh: LinkageMesh,
    assignments: list[CellAssignment],
    fixed_vertices,
    weights: SolverWeights = EVAL_WEIGHTS,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> np.ndarray:
    """Global deformed positions implied by the assigned cells.

    Fixed vertices are pinned at their rest positions; every cell's target is
    its achieved configuration, rotation re-estimated each iteration. Returns
    the (N, 2) deformed vertex table.
    """
    if len(assignments) != mesh.n_cells:
        raise ValidationError(
            f"{mesh.n_cells} cells but {len(assignments)} assignments: every cell must be assigned"
        )
    fixed = np.unique(np.asarray(list(fixed_vertices), int))
    if len(fixed) == 0:
        raise ValidationError("need at least one fixed vertex to pin the reconstruction")
    achieved = np.stack(
        [a.achieved.coords for a in sorted(assignments, key=lambda a: a.cell_index)]
    )  # (C, 8, 2)
    system = assemble_system(mesh, weights, fixed)
    b_t = mesh.vertices[system.handle_ids]

    positions = mesh.vertices.copy()
    prev_disp = None
    grow_streak = 0
    for _ in range(max_iter):
        cc = mesh.cell_coords_centered(positions)
        phi, _ = procrustes_rotation_batch(cc, achieved)
        b_D = rotate_batch(achieved, phi).reshape(-1, 2)
        new_pos = system.solve(assemble_rhs(system, b_D, b_t))
        disp = float(np.abs(new_pos - positions).max())
        positions = new_pos
        if prev_disp is not None and disp > 10.0 * prev_disp and disp > tol:
            grow_streak += 1
            if grow_streak >= 5:
                raise DivergenceError("assembly reconstruction diverged", trace=None)
        else:
            grow_streak = 0
        prev_disp = disp
        if disp < tol:
            break
    return positions


def _r2_dims(targets: np.ndarray, actuals: np.ndarray) -> tuple[list[float], list[int]]:
    t = np.asarray(targets, float)
    a = np.asarray(actuals, float)
    if t.shape != a.shape or t.ndim != 2:
        raise ValidationError("targets and actuals must share a (samples, dims) shape")
    if len(t) < 2:
        raise ValidationError("need at least 2 samples for R^2")
    vals, skipped = [], []
    for j in range(t.shape[1]):
        ss_tot = float(((t[:, j] - t[:, j].mean()) ** 2).sum())
        if ss_tot <= 0:
            skipped.append(j)
            continue
        ss_res = float(((t[:, j] - a[:, j]) ** 2).sum())
        vals.append(1.0 - ss_res / ss_tot)
    if not vals:
        raise ValidationError("all dimensions have zero target variance")
    return vals, skipped


def r2_micro(targets: np.ndarray, actuals: np.ndarray) -> tuple[float, list[int]]:
    """Average R^2 over the 8 angle-change dimensions across K cells.

    Returns (score, skipped dimensions). Dimensions whose targets have zero
    variance are skipped and flagged rather than producing infinities.
    """
    vals, skipped = _r2_dims(targets, actuals)
    return float(np.mean(vals)), skipped


def r2_macro(targets: np.ndarray, actuals: np.ndarray) -> tuple[float, list[int]]:
    """R^2 over handle positions, computed per coordinate dimension then averaged."""
    vals, skipped = _r2_dims(targets, actuals)
    return float(np.mean(vals)), skipped


def mae_mre(
    handle_targets: np.ndarray, handle_actuals: np.ndarray
) -> tuple[float, float | None, float]:
    """(MAE mm, MRE fraction or None, characteristic length L_c mm).

    Inputs are (M, 2) displacement vectors. MAE averages the Euclidean norm of
    the per-handle error; L_c is the largest target displacement magnitude;
    MRE = MAE / L_c, undefined (None) when L_c is zero.
    """
    t = np.atleast_2d(np.asarray(handle_targets, float))
    a = np.atleast_2d(np.asarray(handle_actuals, float))
    if t.shape != a.shape or len(t) < 1:
        raise ValidationError("need matching nonempty target/actual displacement tables")
    err = np.hypot(*(t - a).T)
    mae = float(err.mean())
    l_c = float(np.hypot(*t.T).max())
    mre = mae / l_c if l_c > 0 else None
    return mae, mre, l_c


@dataclass
class Diagnostics:
    dissimilarity: np.ndarray  # (C,)
    edge_deviation: np.ndarray  # (E,)
    area_change: np.ndarray  # (C,), signed mm^2
    total_area_change: float  # signed fraction


def diagnostics(
    mesh: LinkageMesh,
    positions_before: np.ndarray,
    positions_after: np.ndarray,
    db: ConfigDatabase | None = None,
    shortlist_k: int = 32,
) -> Diagnostics:
    """Per-cell and per-edge deformation diagnostics between two position fields."""
    cc_after = mesh.cell_coords_centered(positions_after)
    if db is not None:
        ang = interior_angles_batch(cc_after)
        _, _, dis = nearest_config_batch(db, ang, cc_after, shortlist_k)
    else:
        dis = np.full(mesh.n_cells, np.nan)
    dev = np.abs(edge_lengths(mesh, positions_after) - mesh.rest_lengths)
    area_before = cell_area_batch(mesh.cell_coords(positions_before))
    area_after = cell_area_batch(mesh.cell_coords(positions_after))
    total_before = float(area_before.sum())
    total = (float(area_after.sum()) - total_before) / total_before
    return Diagnostics(
        dissimilarity=dis,
        edge_deviation=dev,
        area_change=area_after - area_before,
        total_area_change=total,
    )


def evaluate_assembly(
    mesh: LinkageMesh,
    assignments: list[CellAssignment],
    fixed_vertices,
    handle_targets: dict[int, np.ndarray],
    db: ConfigDatabase | None = None,
    weights: SolverWeights = EVAL_WEIGHTS,
) -> EvaluationReport:
    """Full report: reconstruct the assembled deformation and score it.

    handle_targets maps non-fixed handle vertex ids to absolute target
    positions; displacements are measured from the rest mesh.
    """
    positions = assemble_evaluate(mesh, assignments, fixed_vertices, weights)
    hids = np.array(sorted(handle_targets), dtype=int)
    t_pos = np.array([handle_targets[i] for i in hids], float)
    t_disp = t_pos - mesh.vertices[hids]
    a_disp = positions[hids] - mesh.vertices[hids]
    mae, mre, l_c = mae_mre(t_disp, a_disp)

    r2ma = r2mi = None
    ma_skip: list[int] = []
    mi_skip: list[int] = []
    if len(hids) >= 2:
        try:
            r2ma, ma_skip = r2_macro(t_pos, positions[hids])
        except ValidationError:
            r2ma, ma_skip = None, [0, 1]
    ordered = sorted(assignments, key=lambda a: a.cell_index)
    t_dtheta = np.stack([a.target.angles for a in ordered]) - REST_ANGLES
    a_dtheta = np.stack([a.achieved.angles for a in ordered]) - REST_ANGLES
    if len(ordered) >= 2:
        try:
            r2mi, mi_skip = r2_micro(t_dtheta, a_dtheta)
        except ValidationError:
            r2mi, mi_skip = None, list(range(8))

    diag = diagnostics(mesh, mesh.vertices, positions, db)
    return EvaluationReport(
        mae=mae,
        mre=mre,
        r2_macro=r2ma,
        r2_micro=r2mi,
        L_c=l_c,
        dissimilarity=diag.dissimilarity,
        edge_deviation=diag.edge_deviation,
        area_change=diag.area_change,
        total_area_change=diag.total_area_change,
        positions=positions,
        r2_macro_skipped=ma_skip,
        r2_micro_skipped=mi_skip,
    )
