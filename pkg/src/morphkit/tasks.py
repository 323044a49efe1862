"""Builders for the shipped example design tasks.

Vertex ids in task files refer to the deterministic numbering produced by
build_mesh, so every builder constructs the mesh first and looks ids up by
half-pitch lattice position.
"""

from __future__ import annotations

import numpy as np

from .conlme import SolverWeights
from .mesh import DomainSpec, LinkageMesh, build_mesh
from .surrogate import MaterialParams
from .taskfile import TaskFile


def _finish(
    occupancy: np.ndarray,
    fixed_lattice: list[tuple[int, int]],
    handle_targets,  # callable mesh -> list[(vertex_id, (tx, ty))]
    edge_length: float,
    weights: SolverWeights,
    material: MaterialParams,
    **task_kw,
) -> tuple[TaskFile, LinkageMesh]:
    rows, cols = occupancy.shape
    spec = DomainSpec(rows=rows, cols=cols, occupancy=occupancy, edge_length=edge_length)
    mesh = build_mesh(spec)
    fixed = sorted(mesh.vertex_id_at(ix, iy) for ix, iy in fixed_lattice)
    handles = handle_targets(mesh)
    spec = DomainSpec(
        rows=rows,
        cols=cols,
        occupancy=occupancy,
        edge_length=edge_length,
        handles=handles,
        fixed=fixed,
    )
    return TaskFile(domain=spec, weights=weights, material=material, **task_kw), mesh


def sinusoid_cantilever_task(
    n_cols: int = 20,
    n_rows: int = 10,
    amplitude_factor: float = 0.5,
    edge_length: float = 0.5,
    weights: SolverWeights | None = None,
    material: MaterialParams | None = None,
    **task_kw,
) -> tuple[TaskFile, LinkageMesh]:
    """Cantilever beam whose bottom edge must drop onto a sinusoidal profile.

    The left edge is fixed; every bottom-edge corner vertex is a handle whose
    target lies on the curve y(x) = -A sin^2(pi x / 2L) (a sinusoidal ramp
    with zero slope at the clamped root and at the tip, tip drop
    A = amplitude_factor * beam width). Targets are spaced along the curve by
    arc length so the inextensible bottom bar chain can bend onto it without
    stretching; the tip therefore pulls inward as well as down.
    """
    occ = np.ones((n_rows, n_cols), bool)
    pitch = 2 * edge_length
    length = n_cols * pitch
    amplitude = amplitude_factor * n_rows * pitch

    # Arc-length parametrization of the target curve on a dense grid.
    xs = np.linspace(0.0, length, 4096)
    ys = -amplitude * np.sin(0.5 * np.pi * xs / length) ** 2
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(xs), np.diff(ys)))])

    def handles(mesh: LinkageMesh):
        out = []
        for c in range(1, n_cols + 1):  # skip the fixed x = 0 corner
            vid = mesh.vertex_id_at(2 * c, 0)
            s = c * pitch  # rest distance along the bottom chain
            tx = float(np.interp(s, arc, xs))
            ty = float(np.interp(s, arc, ys))
            out.append((vid, (tx, ty)))
        return out

    fixed_lattice = [(0, iy) for iy in range(2 * n_rows + 1)]
    return _finish(occ, fixed_lattice, handles, edge_length, weights or SolverWeights(),
                   material or MaterialParams(), **task_kw)


def checkerboard_beam_task(
    n_cols: int = 12,
    n_rows: int = 5,
    tip_drop_factor: float = 1.0,
    edge_length: float = 0.5,
    weights: SolverWeights | None = None,
    material: MaterialParams | None = None,
    **task_kw,
) -> tuple[TaskFile, LinkageMesh]:
    """Sparse beam: solid even rows, checkerboard struts between, tip pulled down.

    Odd rows keep only every other cell, so the beam alternates solid strips
    with perforated strips (kirigami-like) while staying edge-connected. The
    sparse infill admits much larger deformation per unit of material; a
    single handle drags the free tip corner downward by tip_drop_factor times
    the beam height.
    """
    occ = np.zeros((n_rows, n_cols), bool)
    for r in range(n_rows):
        for c in range(n_cols):
            occ[r, c] = r % 2 == 0 or (r + c) % 2 == 0
    pitch = 2 * edge_length
    drop = tip_drop_factor * n_rows * pitch

    def handles(mesh: LinkageMesh):
        vid = mesh.vertex_id_at(2 * n_cols, 0)
        x, y = mesh.vertices[vid]
        return [(vid, (float(x), float(y - drop)))]

    fixed_lattice = [(0, iy) for iy in range(0, 3)]  # left side of the bottom-row cell
    return _finish(occ, fixed_lattice, handles, edge_length, weights or SolverWeights(),
                   material or MaterialParams(), **task_kw)


def octopus_task(
    arm_length: int = 4,
    body: int = 3,
    pull_factor: float = 0.6,
    edge_length: float = 0.5,
    weights: SolverWeights | None = None,
    material: MaterialParams | None = None,
    **task_kw,
) -> tuple[TaskFile, LinkageMesh]:
    """Multi-arm occupancy mask with one pulled handle per arm tip.

    A square body anchors three single-cell-wide arms (left, right, top);
    each tip is displaced in a different direction by pull_factor times the
    arm length. The body's bottom row is fixed.
    """
    rows = body + arm_length
    cols = body + 2 * arm_length
    occ = np.zeros((rows, cols), bool)
    b0 = arm_length  # body column offset
    occ[0:body, b0 : b0 + body] = True
    mid = body // 2
    occ[mid, 0:b0] = True  # left arm
    occ[mid, b0 + body :] = True  # right arm
    occ[body:, b0 + mid] = True  # top arm
    pitch = 2 * edge_length
    pull = pull_factor * arm_length * pitch

    def handles(mesh: LinkageMesh):
        out = []
        tips = [
            ((0, 2 * mid + 1), (-0.3 * pull, -pull)),  # left arm tip curls down
            ((2 * cols, 2 * mid + 1), (0.3 * pull, pull)),  # right arm tip lifts
            ((2 * (b0 + mid) + 1, 2 * rows), (pull, 0.0)),  # top arm sweeps right
        ]
        for (ix, iy), (dx, dy) in tips:
            vid = mesh.vertex_id_at(ix, iy)
            x, y = mesh.vertices[vid]
            out.append((vid, (float(x + dx), float(y + dy))))
        return out

    fixed_lattice = [(2 * (b0 + c) + dx, 0) for c in range(body) for dx in (0, 1)] + [
        (2 * (b0 + body), 0)
    ]
    return _finish(occ, fixed_lattice, handles, edge_length, weights or SolverWeights(),
                   material or MaterialParams(), **task_kw)
