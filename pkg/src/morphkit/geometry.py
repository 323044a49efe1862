"""Planar geometry of equilateral octagon unit cells.

A unit cell is an equilateral octagon traversed counter-clockwise starting at
the bottom-left corner of the rest square; odd slots are bar midpoints. The
cell is fully described either by its 8 interior angles or by 8 centered
vertex coordinates, and the two descriptions are inverse up to rigid motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClosureError, GeometryError

DEFAULT_EDGE_LENGTH = 0.5  # mm, rest length of every bar

# Interior angles of the rest cell: 90 deg at corners, 180 deg at midpoints.
REST_ANGLES = np.array([np.pi / 2, np.pi] * 4)

ANGLE_SUM = 6.0 * np.pi  # interior-angle sum of any simple octagon


@dataclass(frozen=True)
class CellConfig:
    """One cell's shape: 8 interior angles (rad) and 8 centered coords (mm)."""

    angles: np.ndarray  # (8,)
    coords: np.ndarray  # (8, 2), centroid at origin

    def __post_init__(self):
        object.__setattr__(self, "angles", np.asarray(self.angles, float))
        object.__setattr__(self, "coords", np.asarray(self.coords, float))


def signed_area(coords: np.ndarray) -> float:
    """Shoelace signed area; positive for counter-clockwise order."""
    c = np.asarray(coords, float)
    x, y = c[:, 0], c[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def cell_area(coords: np.ndarray) -> float:
    """Positive shoelace area of a simple polygon, in mm^2."""
    return abs(signed_area(coords))


def cell_area_batch(coords: np.ndarray) -> np.ndarray:
    """Positive shoelace areas for a (..., n, 2) stack of polygons."""
    c = np.asarray(coords, float)
    x, y = c[..., 0], c[..., 1]
    a = 0.5 * ((x * np.roll(y, -1, axis=-1)).sum(-1) - (y * np.roll(x, -1, axis=-1)).sum(-1))
    return np.abs(a)


def interior_angles(coords: np.ndarray) -> np.ndarray:
    """Interior angle at each vertex of a simple polygon, each in (0, 2*pi).

    The polygon may be given in either orientation; angles are computed as if
    it were counter-clockwise, so the result is invariant under reversal,
    rotation, and translation.
    """
    c = np.asarray(coords, float)
    n = len(c)
    if len(np.unique(c.round(decimals=12), axis=0)) != n:
        raise GeometryError("repeated vertex in polygon")
    d = np.roll(c, -1, axis=0) - c  # edge j: v_j -> v_{j+1}
    lengths = np.hypot(d[:, 0], d[:, 1])
    if np.any(lengths < 1e-12):
        raise GeometryError("zero-length polygon edge")
    d_in = np.roll(d, 1, axis=0)  # incoming edge at vertex j
    cross = d_in[:, 0] * d[:, 1] - d_in[:, 1] * d[:, 0]
    dot = (d_in * d).sum(axis=1)
    turn = np.arctan2(cross, dot)
    if signed_area(c) < 0:
        turn = -turn
    return np.pi - turn


def interior_angles_batch(coords: np.ndarray) -> np.ndarray:
    """Vectorized interior_angles over a (m, n, 2) stack (no degeneracy checks)."""
    c = np.asarray(coords, float)
    d = np.roll(c, -1, axis=1) - c
    d_in = np.roll(d, 1, axis=1)
    cross = d_in[..., 0] * d[..., 1] - d_in[..., 1] * d[..., 0]
    dot = (d_in * d).sum(axis=-1)
    turn = np.arctan2(cross, dot)
    x, y = c[..., 0], c[..., 1]
    area = 0.5 * ((x * np.roll(y, -1, axis=1)).sum(1) - (y * np.roll(x, -1, axis=1)).sum(1))
    turn = np.where(area[:, None] < 0, -turn, turn)
    return np.pi - turn


def angles_from_coords(coords: np.ndarray) -> np.ndarray:
    """Interior angles of an 8-vertex simple polygon (orientation enforced)."""
    c = np.asarray(coords, float)
    if c.shape != (8, 2):
        raise GeometryError(f"expected (8, 2) coords, got {c.shape}")
    return interior_angles(c)


def _walk(angles: np.ndarray, edge_length: float) -> tuple[np.ndarray, float]:
    """Edge walk from the origin; returns 8 vertices and the closure residual.

    Edge j runs from vertex j to vertex j+1; the heading of edge 0 is +x and
    each subsequent heading turns by the exterior angle (pi - angle) of the
    vertex being left. angle[0] only enters through the angle-sum closure.
    """
    a = np.asarray(angles, float)
    headings = np.concatenate([[0.0], np.cumsum(np.pi - a[1:])])
    steps = edge_length * np.stack([np.cos(headings), np.sin(headings)], axis=1)
    verts = np.vstack([np.zeros(2), np.cumsum(steps, axis=0)])
    residual = float(np.hypot(*verts[8]))
    return verts[:8], residual


def octagon_from_angles(
    angles: np.ndarray,
    edge_length: float = DEFAULT_EDGE_LENGTH,
    strict: bool = True,
    closure_tol: float = 1e-6,
) -> np.ndarray:
    """Reconstruct centered octagon coordinates from 8 interior angles.

    With strict=True the walk must return to its start within closure_tol mm
    (and the angles must sum to 6*pi); otherwise a ClosureError carrying the
    residual is raised. strict=False tolerates open walks and is used for
    diagnostics on non-converged intermediate configurations.
    """
    a = np.asarray(angles, float)
    coords, residual = _walk(a, edge_length)
    if strict:
        if residual > closure_tol:
            raise ClosureError(residual)
        if abs(a.sum() - ANGLE_SUM) > 1e-6:
            raise ClosureError(abs(a.sum() - ANGLE_SUM), "interior angles do not sum to 6*pi")
    return coords - coords.mean(axis=0)


def octagon_from_angles_batch(angles: np.ndarray, edge_length: float = DEFAULT_EDGE_LENGTH) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized walk for (m, 8) angle stacks; returns centered coords and residuals."""
    a = np.asarray(angles, float)
    headings = np.concatenate([np.zeros((len(a), 1)), np.cumsum(np.pi - a[:, 1:], axis=1)], axis=1)
    steps = edge_length * np.stack([np.cos(headings), np.sin(headings)], axis=2)
    verts = np.concatenate([np.zeros((len(a), 1, 2)), np.cumsum(steps, axis=1)], axis=1)
    residual = np.hypot(verts[:, 8, 0], verts[:, 8, 1])
    coords = verts[:, :8]
    return coords - coords.mean(axis=1, keepdims=True), residual


def closure_residual(angles: np.ndarray, edge_length: float = DEFAULT_EDGE_LENGTH) -> float:
    """Distance by which the 8-edge walk misses its starting point, in mm."""
    return _walk(np.asarray(angles, float), edge_length)[1]


def polygon_is_simple(coords: np.ndarray) -> bool:
    return bool(polygon_is_simple_batch(np.asarray(coords, float)[None])[0])


def polygon_is_simple_batch(coords: np.ndarray) -> np.ndarray:
    """True where no two non-adjacent edges of each polygon intersect."""
    c = np.asarray(coords, float)
    n = c.shape[1]
    p = c
    q = np.roll(c, -1, axis=1)
    ok = np.ones(len(c), dtype=bool)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # adjacent through the wrap-around vertex
            ok &= ~_segments_intersect(p[:, i], q[:, i], p[:, j], q[:, j])
    return ok


def _segments_intersect(a0, a1, b0, b1) -> np.ndarray:
    def orient(o, p, q):
        return (p[:, 0] - o[:, 0]) * (q[:, 1] - o[:, 1]) - (p[:, 1] - o[:, 1]) * (q[:, 0] - o[:, 0])

    d1 = orient(a0, a1, b0)
    d2 = orient(a0, a1, b1)
    d3 = orient(b0, b1, a0)
    d4 = orient(b0, b1, a1)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def procrustes_rotation_batch(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimal rotation angle phi and residual so that R(phi) @ b best matches a.

    a, b are (..., n, 2) centered point sets. residual is the Euclidean norm
    over all 2n coordinates of a - R(phi) b. Reflections are excluded.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    dot = (a * b).sum(axis=(-1, -2))
    # maximize cos(phi)*dot + sin(phi)*cross with cross = sum(a_y b_x - a_x b_y)
    cross = (a[..., 1] * b[..., 0] - a[..., 0] * b[..., 1]).sum(axis=-1)
    phi = np.arctan2(cross, dot)
    rb = rotate_batch(b, phi)
    residual = np.sqrt(((a - rb) ** 2).sum(axis=(-1, -2)))
    return phi, residual


def rotate_batch(pts: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Rotate (..., n, 2) point sets by per-set angles phi."""
    c, s = np.cos(phi), np.sin(phi)
    x, y = pts[..., 0], pts[..., 1]
    cb, sb = np.broadcast_to(c, x.shape[:-1]), np.broadcast_to(s, x.shape[:-1])
    return np.stack(
        [cb[..., None] * x - sb[..., None] * y, sb[..., None] * x + cb[..., None] * y], axis=-1
    )


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def procrustes_align(a: np.ndarray, b: np.ndarray, center_tol: float = 1e-9) -> tuple[float, float]:
    """Closed-form 2D orthogonal Procrustes: rotation (rad) and residual (mm).

    Both point sets must already be centered at the origin.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if np.hypot(*a.mean(axis=0)) > center_tol or np.hypot(*b.mean(axis=0)) > center_tol:
        raise GeometryError("procrustes_align requires centered point sets")
    phi, residual = procrustes_rotation_batch(a[None], b[None])
    return float(phi[0]), float(residual[0])


def rest_cell_coords(edge_length: float = DEFAULT_EDGE_LENGTH) -> np.ndarray:
    """Centered coordinates of the rest cell (unit square with side midpoints)."""
    return octagon_from_angles(REST_ANGLES, edge_length)
