"""Constrained Laplacian mesh editing: the macroscale solver.

Minimizes w_L*E_L + w_S*E_S + w_t*E_t over vertex positions, alternating
between (a) retrieving each cell's nearest database configuration with its
optimal rotation and (b) solving the resulting sparse normal equations. The
system matrix depends only on (mesh, weights, handle set) and is factorized
once per solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .configdb import ConfigDatabase, nearest_config_batch
from .errors import DivergenceError, NumericalError, ValidationError
from .geometry import interior_angles_batch, procrustes_rotation_batch, rotate_batch
from .mesh import LinkageMesh, edge_lengths


@dataclass(frozen=True)
class SolverWeights:
    """Weights of the Laplacian, consistency, and target energy terms."""

    w_L: float = 1.0
    w_S: float = 1.0
    w_t: float = 1e3

    def __post_init__(self):
        if min(self.w_L, self.w_S, self.w_t) < 0:
            raise ValidationError("solver weights must be nonnegative")
        if self.w_t <= 0:
            raise ValidationError("w_t must be positive (handles pin the system)")
        if self.w_L + self.w_S <= 0:
            raise ValidationError("need w_L + w_S > 0 for a positive definite system")

    def replace(self, **kw) -> "SolverWeights":
        d = {"w_L": self.w_L, "w_S": self.w_S, "w_t": self.w_t}
        d.update(kw)
        return SolverWeights(**d)


@dataclass
class ConlmeState:
    """Result of a macroscale solve."""

    positions: np.ndarray  # (N, 2)
    record_ids: np.ndarray  # (C,)
    rotations: np.ndarray  # (C,)
    dissimilarities: np.ndarray  # (C,)
    iterations: int
    converged: bool
    edge_deviation: np.ndarray  # (E,), |length - rest|
    history: list[dict] = field(default_factory=list)


def assemble_laplacian(mesh: LinkageMesh) -> sp.csr_matrix:
    """Uniform-weight graph Laplacian rows: v_i - mean of neighbors of i."""
    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    for i, nbrs in enumerate(mesh.adjacency):
        if len(nbrs) == 0:
            raise ValidationError(f"vertex {i} is isolated (degree 0)")
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
        w = -1.0 / len(nbrs)
        for j in nbrs:
            rows.append(i)
            cols.append(int(j))
            vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_consistency(mesh: LinkageMesh) -> sp.csr_matrix:
    """Per-cell centering operator: 8 rows per cell, applied per coordinate.

    Row 8c+j maps positions to the j-th vertex of cell c minus the cell's
    vertex centroid, so the block equals the cell's centered coordinates.
    """
    c = mesh.n_cells
    rows, cols, vals = [], [], []
    for ci, ring in enumerate(mesh.cells):
        for j, vid in enumerate(ring):
            r = 8 * ci + j
            rows.append(r)
            cols.append(int(vid))
            vals.append(1.0)
            for vk in ring:
                rows.append(r)
                cols.append(int(vk))
                vals.append(-1.0 / 8.0)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(8 * c, mesh.n_vertices))
    m.sum_duplicates()
    return m


@dataclass
class FactorizedSystem:
    """L^a = w_L L_L'L_L + w_S L_S'L_S + w_t L_t'L_t with a reusable factorization."""

    mesh: LinkageMesh
    weights: SolverWeights
    handle_ids: np.ndarray  # (M,), sorted
    L_L: sp.csr_matrix
    L_S: sp.csr_matrix
    A: sp.csc_matrix
    lu: spla.SuperLU

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = self.lu.solve(rhs)
        # one step of iterative refinement keeps the relative residual ~1e-15
        x += self.lu.solve(rhs - self.A @ x)
        return x


def assemble_system(
    mesh: LinkageMesh,
    weights: SolverWeights,
    handle_ids: np.ndarray,
    L_L: sp.csr_matrix | None = None,
    L_S: sp.csr_matrix | None = None,
) -> FactorizedSystem:
    """Build and factorize the normal matrix for a (mesh, weights, handle set)."""
    handle_ids = np.unique(np.asarray(handle_ids, int))
    if len(handle_ids) == 0:
        raise ValidationError("at least one handle (or fixed) vertex is required")
    L_L = assemble_laplacian(mesh) if L_L is None else L_L
    L_S = assemble_consistency(mesh) if L_S is None else L_S
    n = mesh.n_vertices
    sel = sp.csr_matrix(
        (np.ones(len(handle_ids)), (handle_ids, handle_ids)), shape=(n, n)
    )
    A = (
        weights.w_L * (L_L.T @ L_L)
        + weights.w_S * (L_S.T @ L_S)
        + weights.w_t * sel
    ).tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as e:
        raise NumericalError(f"normal matrix factorization failed: {e}") from e
    return FactorizedSystem(
        mesh=mesh, weights=weights, handle_ids=handle_ids, L_L=L_L, L_S=L_S, A=A, lu=lu
    )


def assemble_rhs(
    system: FactorizedSystem, b_D: np.ndarray, b_t: np.ndarray
) -> np.ndarray:
    """b^a = w_S L_S' b_D + w_t L_t' b_t (the Laplacian target is zero)."""
    w = system.weights
    rhs = w.w_S * (system.L_S.T @ b_D)
    rhs[system.handle_ids] += w.w_t * b_t
    return rhs


def solve_step(system: FactorizedSystem, b_D: np.ndarray, b_t: np.ndarray) -> np.ndarray:
    """Exact minimizer of the quadratic energy for fixed cell targets b_D."""
    return system.solve(assemble_rhs(system, b_D, b_t))


def energy_terms(
    system: FactorizedSystem, positions: np.ndarray, b_D: np.ndarray, b_t: np.ndarray
) -> dict:
    w = system.weights
    e_l = float(((system.L_L @ positions) ** 2).sum())
    e_s = float(((system.L_S @ positions - b_D) ** 2).sum())
    e_t = float(((positions[system.handle_ids] - b_t) ** 2).sum())
    return {
        "E_L": e_l,
        "E_S": e_s,
        "E_t": e_t,
        "total": w.w_L * e_l + w.w_S * e_s + w.w_t * e_t,
    }


def assign_cells(
    db: ConfigDatabase,
    mesh: LinkageMesh,
    positions: np.ndarray,
    shortlist_k: int = 32,
    prev_ids: np.ndarray | None = None,
    frozen: dict[int, tuple[int, float]] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell nearest database configuration at the current positions.

    prev_ids, when given, are kept as candidates so a shortlist miss can never
    increase the consistency energy between iterations. frozen maps cell index
    to a pinned (record id, rotation) that bypasses retrieval entirely.
    """
    cc = mesh.cell_coords_centered(positions)
    ang = interior_angles_batch(cc)
    n = mesh.n_cells
    ids = np.zeros(n, dtype=int)
    phi = np.zeros(n)
    dis = np.zeros(n)
    frozen = frozen or {}
    free = np.array([ci for ci in range(n) if ci not in frozen], dtype=int)
    if len(free):
        ids[free], phi[free], dis[free] = nearest_config_batch(
            db, ang[free], cc[free], shortlist_k
        )
        if prev_ids is not None:
            p_phi, p_res = procrustes_rotation_batch(cc[free], db.coords[prev_ids[free]])
            keep = p_res < dis[free]
            ids[free] = np.where(keep, prev_ids[free], ids[free])
            phi[free] = np.where(keep, p_phi, phi[free])
            dis[free] = np.where(keep, p_res, dis[free])
    if frozen:
        fc = np.array(sorted(frozen), dtype=int)
        recs = np.array([frozen[ci][0] for ci in fc], dtype=int)
        rots = np.array([frozen[ci][1] for ci in fc])
        ids[fc] = recs
        phi[fc] = rots
        _, res = procrustes_rotation_batch(cc[fc], rotate_batch(db.coords[recs], rots))
        dis[fc] = res
    return ids, phi, dis


def cell_targets(db: ConfigDatabase, ids: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Stacked (8C, 2) rotated record coordinates, the E_S target b_D."""
    return rotate_batch(db.coords[ids], phi).reshape(-1, 2)


def conlme_solve(
    mesh: LinkageMesh,
    handles: dict[int, np.ndarray],
    weights: SolverWeights,
    db: ConfigDatabase,
    max_iter: int = 200,
    tol: float = 1e-6,
    shortlist_k: int = 32,
    frozen: dict[int, tuple[int, float]] | None = None,
    init_positions: np.ndarray | None = None,
    system: FactorizedSystem | None = None,
) -> ConlmeState:
    """Alternating macroscale solve.

    handles maps vertex id to its absolute target position (fixed vertices are
    handles with zero displacement). Starts from a pure Laplacian + target
    solve unless init_positions is given; stops when the max per-vertex move
    between iterations falls below tol (mm).
    """
    handle_ids = np.array(sorted(handles), dtype=int)
    if len(handle_ids) == 0:
        raise ValidationError("at least one handle or fixed vertex is required")
    b_t = np.array([handles[i] for i in handle_ids], float)

    if system is None:
        system = assemble_system(mesh, weights, handle_ids)
    L_L, L_S = system.L_L, system.L_S

    if init_positions is None:
        init_sys = assemble_system(
            mesh,
            weights.replace(w_S=0.0, w_L=weights.w_L if weights.w_L > 0 else 1.0),
            handle_ids,
            L_L=L_L,
            L_S=L_S,
        )
        positions = init_sys.solve(assemble_rhs(init_sys, np.zeros((8 * mesh.n_cells, 2)), b_t))
    else:
        positions = np.asarray(init_positions, float).copy()

    ids = phi = dis = None
    history: list[dict] = []
    converged = False
    grow_streak = 0
    prev_disp = None
    iteration = 0
    for iteration in range(1, max_iter + 1):
        ids, phi, dis = assign_cells(db, mesh, positions, shortlist_k, prev_ids=ids, frozen=frozen)
        b_D = cell_targets(db, ids, phi)
        new_pos = solve_step(system, b_D, b_t)
        disp = float(np.abs(new_pos - positions).max()) if len(positions) else 0.0
        positions = new_pos
        history.append(
            {"iteration": iteration, "max_displacement": disp, **energy_terms(system, positions, b_D, b_t)}
        )
        if prev_disp is not None and disp > 10.0 * prev_disp and disp > tol:
            grow_streak += 1
            if grow_streak >= 5:
                raise DivergenceError(
                    f"macroscale solve diverging (displacement grew 10x for 5 iterations)",
                    trace=history,
                )
        else:
            grow_streak = 0
        prev_disp = disp
        if disp < tol:
            converged = True
            break

    # final assignments consistent with the converged positions
    ids, phi, dis = assign_cells(db, mesh, positions, shortlist_k, prev_ids=ids, frozen=frozen)
    dev = np.abs(edge_lengths(mesh, positions) - mesh.rest_lengths)
    return ConlmeState(
        positions=positions,
        record_ids=ids,
        rotations=phi,
        dissimilarities=dis,
        iterations=iteration,
        converged=converged,
        edge_deviation=dev,
        history=history,
    )


@dataclass
class AutoWeightResult:
    weights: SolverWeights
    state: ConlmeState
    max_dissimilarity: float
    met: bool
    doublings: int


def auto_weight_ws(
    mesh: LinkageMesh,
    handles: dict[int, np.ndarray],
    weights_init: SolverWeights,
    db: ConfigDatabase,
    dissim_threshold: float,
    max_doublings: int = 12,
    **solve_kwargs,
) -> AutoWeightResult:
    """Double w_S until the max per-cell dissimilarity meets the threshold.

    Returns the first passing weights, or the best-found ones with met=False.
    """
    if dissim_threshold <= 0:
        raise ValidationError("dissim_threshold must be positive")
    best: AutoWeightResult | None = None
    weights = weights_init
    for d in range(max_doublings + 1):
        state = conlme_solve(mesh, handles, weights, db, **solve_kwargs)
        mx = float(state.dissimilarities.max()) if len(state.dissimilarities) else 0.0
        result = AutoWeightResult(weights, state, mx, mx <= dissim_threshold, d)
        if result.met:
            return result
        if best is None or mx < best.max_dissimilarity:
            best = result
        weights = weights.replace(w_S=2.0 * weights.w_S)
    return best
