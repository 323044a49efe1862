"""Microscale design: assign an infill design to every cell of a solved mesh.

Two routes: the greedy adjustable search (retrieve, pin, re-solve, repeat in
known-vertex priority order) and import of externally generated design tables
(e.g. from the diffusion-model companion) through the documented CSV formats.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .configdb import ConfigDatabase, nearest_config_batch
from .conlme import (
    ConlmeState,
    SolverWeights,
    assemble_consistency,
    assemble_laplacian,
    assemble_system,
    conlme_solve,
)
from .errors import ValidationError
from .geometry import (
    CellConfig,
    interior_angles_batch,
    octagon_from_angles,
    procrustes_rotation_batch,
    rotate_batch,
)
from .mesh import LinkageMesh
from .surrogate import InfillDesign, MaterialParams, surrogate_forward


@dataclass(frozen=True)
class CellAssignment:
    """One cell's chosen design with its target and achieved configurations."""

    cell_index: int
    design: InfillDesign
    achieved: CellConfig
    target: CellConfig
    rotation: float
    dissimilarity: float
    record_id: int = -1


def search_order(mesh: LinkageMesh, known_vertices) -> np.ndarray:
    """Cell visitation order by descending count of already-known vertices.

    Ties break toward the lowest cell index; once a cell is selected all of
    its vertices count as known for the remaining cells.
    """
    known = np.zeros(mesh.n_vertices, dtype=bool)
    known_list = list(known_vertices)
    if len(known_list) == 0:
        raise ValidationError("need at least one known (fixed or handle) vertex")
    known[np.asarray(known_list, int)] = True
    remaining = np.ones(mesh.n_cells, dtype=bool)
    order = []
    for _ in range(mesh.n_cells):
        counts = known[mesh.cells].sum(axis=1)
        counts[~remaining] = -1
        ci = int(counts.argmax())  # argmax takes the first (lowest) index on ties
        order.append(ci)
        remaining[ci] = False
        known[mesh.cells[ci]] = True
    return np.array(order, dtype=int)


def as_design(
    mesh: LinkageMesh,
    macro_state: ConlmeState,
    db: ConfigDatabase,
    weights: SolverWeights,
    handles: dict[int, np.ndarray],
    shortlist_k: int = 32,
    resolve_max_iter: int = 8,
    resolve_tol: float = 1e-5,
) -> tuple[list[CellAssignment], ConlmeState]:
    """Greedy adjustable search over all cells.

    handles are the task's handle and fixed vertices (absolute targets); their
    ids seed the known-vertex set. Each step retrieves the best record for the
    next cell, pins that cell's vertices at the placed achieved coordinates
    (as additional handles with weight w_t), and re-solves the macroscale
    problem for the remaining free vertices.
    """
    positions = macro_state.positions.copy()
    order = search_order(mesh, handles.keys())
    L_L = assemble_laplacian(mesh)
    L_S = assemble_consistency(mesh)
    pinned = {i: np.asarray(t, float) for i, t in handles.items()}
    frozen: dict[int, tuple[int, float]] = {}
    chosen: dict[int, tuple[int, float, float, CellConfig]] = {}

    for ci in order:
        ring = mesh.cells[ci]
        cc = positions[ring]
        centroid = cc.mean(axis=0)
        centered = cc - centroid
        ang = interior_angles_batch(centered[None])[0]
        ids, phi, dis = nearest_config_batch(db, ang[None], centered[None], shortlist_k)
        rec, rot, d = int(ids[0]), float(phi[0]), float(dis[0])
        target = CellConfig(angles=ang, coords=centered)
        chosen[ci] = (rec, rot, d, target)
        frozen[ci] = (rec, rot)
        placed = rotate_batch(db.coords[rec][None], np.array([rot]))[0] + centroid
        for j, vid in enumerate(ring):
            pinned.setdefault(int(vid), placed[j])
        if len(frozen) == mesh.n_cells:
            break
        system = assemble_system(mesh, weights, np.array(sorted(pinned)), L_L=L_L, L_S=L_S)
        state = conlme_solve(
            mesh,
            pinned,
            weights,
            db,
            max_iter=resolve_max_iter,
            tol=resolve_tol,
            shortlist_k=shortlist_k,
            frozen=frozen,
            init_positions=positions,
            system=system,
        )
        positions = state.positions

    system = assemble_system(mesh, weights, np.array(sorted(pinned)), L_L=L_L, L_S=L_S)
    final_state = conlme_solve(
        mesh,
        pinned,
        weights,
        db,
        shortlist_k=shortlist_k,
        frozen=frozen,
        init_positions=positions,
        system=system,
    )

    assignments = []
    for ci in range(mesh.n_cells):
        rec, rot, d, target = chosen[ci]
        achieved = CellConfig(angles=db.angles[rec], coords=db.coords[rec])
        assignments.append(
            CellAssignment(
                cell_index=ci,
                design=InfillDesign(db.radii[rec], db.thicknesses[rec], db.orientations[rec]),
                achieved=achieved,
                target=target,
                rotation=rot,
                dissimilarity=d,
                record_id=rec,
            )
        )
    return assignments, final_state


def emit_conditions(macro_state: ConlmeState, mesh: LinkageMesh) -> np.ndarray:
    """Per-cell target angles from the solved mesh, shape (C, 8)."""
    cc = mesh.cell_coords_centered(macro_state.positions)
    return interior_angles_batch(cc)


def import_designs(
    conditions: np.ndarray,
    design_rows: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]],
    mat: MaterialParams,
    edge_length: float,
    report_threshold: float = 0.05,
) -> tuple[list[CellAssignment], list[int]]:
    """Build assignments from an external designs table.

    design_rows holds (cell_index, radii, thicknesses, orientations) tuples;
    every cell of the condition table must appear exactly once and every
    parameter must be in bounds. Returns (assignments, flagged cell indices
    whose achieved-vs-target dissimilarity exceeds report_threshold).
    """
    n_cells = len(conditions)
    seen: dict[int, int] = {}
    for rownum, (ci, _, _, _) in enumerate(design_rows):
        if ci in seen:
            raise ValidationError(f"designs table row {rownum}: duplicate cell {ci}")
        if not 0 <= ci < n_cells:
            raise ValidationError(f"designs table row {rownum}: unknown cell {ci}")
        seen[ci] = rownum
    missing = sorted(set(range(n_cells)) - seen.keys())
    if missing:
        raise ValidationError(f"designs table missing cells: {missing}")

    assignments: list[CellAssignment] = []
    flagged: list[int] = []
    ordered = sorted(design_rows, key=lambda row: row[0])
    for ci, r, h, b in ordered:
        try:
            design = InfillDesign(r, h, b)
        except ValidationError as e:
            raise ValidationError(f"designs table cell {ci} (row {seen[ci]}): {e}") from e
        achieved = surrogate_forward(design, mat, edge_length)
        t_ang = np.asarray(conditions[ci], float)
        t_coords = octagon_from_angles(t_ang, edge_length, strict=False)
        phi, resid = procrustes_rotation_batch(t_coords[None], achieved.coords[None])
        d = float(resid[0])
        if d > report_threshold:
            flagged.append(ci)
        assignments.append(
            CellAssignment(
                cell_index=int(ci),
                design=design,
                achieved=achieved,
                target=CellConfig(angles=t_ang, coords=t_coords),
                rotation=float(phi[0]),
                dissimilarity=d,
            )
        )
    return assignments, flagged


# ---------------------------------------------------------------- CSV formats

CONDITION_COLUMNS = ["cell"] + [f"th{k}" for k in range(1, 9)]
DESIGN_COLUMNS = (
    ["cell"]
    + [f"r{k}" for k in range(1, 9)]
    + [f"h{k}" for k in range(1, 9)]
    + [f"b{k}" for k in range(1, 9)]
)


def write_conditions_csv(conditions: np.ndarray, path_or_buf) -> None:
    """`cell,th1..th8` with angles in radians."""
    buf = io.StringIO()
    buf.write(",".join(CONDITION_COLUMNS) + "\n")
    for ci, row in enumerate(np.asarray(conditions, float)):
        buf.write(",".join([str(ci)] + [repr(float(v)) for v in row]) + "\n")
    _write(buf.getvalue(), path_or_buf)


def read_conditions_csv(path) -> np.ndarray:
    rows = _read_table(path, CONDITION_COLUMNS)
    out = np.empty((len(rows), 8))
    for ci, vals in rows:
        if not 0 <= ci < len(rows):
            raise ValidationError(f"condition table cell ids not contiguous (saw {ci})")
        out[ci] = vals
    return out


def write_designs_csv(assignments: list[CellAssignment], path_or_buf) -> None:
    """`cell,r1..r8,h1..h8,b1..b8` in mm / orientation sign units."""
    buf = io.StringIO()
    buf.write(",".join(DESIGN_COLUMNS) + "\n")
    for a in sorted(assignments, key=lambda a: a.cell_index):
        d = a.design
        vals = (
            [str(a.cell_index)]
            + [repr(float(v)) for v in d.radii]
            + [repr(float(v)) for v in d.thicknesses]
            + [str(int(v)) for v in d.orientations]
        )
        buf.write(",".join(vals) + "\n")
    _write(buf.getvalue(), path_or_buf)


def read_designs_csv(path) -> list[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    rows = _read_table(path, DESIGN_COLUMNS)
    return [(ci, vals[:8], vals[8:16], vals[16:24].astype(int)) for ci, vals in rows]


def write_assignments_csv(assignments: list[CellAssignment], path_or_buf) -> None:
    """Per-cell retrieval summary: cell, record id, rotation, dissimilarity."""
    buf = io.StringIO()
    buf.write("cell,record_id,rotation,dissimilarity\n")
    for a in sorted(assignments, key=lambda a: a.cell_index):
        buf.write(
            f"{a.cell_index},{a.record_id},{float(a.rotation)!r},{float(a.dissimilarity)!r}\n"
        )
    _write(buf.getvalue(), path_or_buf)


def _write(data: str, path_or_buf) -> None:
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(data)
    else:
        with open(path_or_buf, "w") as f:
            f.write(data)


def _read_table(path, columns) -> list[tuple[int, np.ndarray]]:
    with open(path) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != columns:
            raise ValidationError(f"expected header {','.join(columns)} in {path}")
        rows = []
        for rownum, rec in enumerate(reader):
            if not rec:
                continue
            if len(rec) != len(columns):
                raise ValidationError(f"{path} row {rownum}: expected {len(columns)} fields")
            rows.append((int(rec[0]), np.array([float(v) for v in rec[1:]])))
    return rows
