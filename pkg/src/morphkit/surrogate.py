"""Deterministic forward model from infill design to deformed cell angles.

Stands in for per-cell thermomechanical FEA: each of the eight curved beams is
treated as an equal-layer thermal bimorph whose curvature drives the interior
angles at its two endpoint hinges; the raw angle increments are then projected
onto the octagon closure manifold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClosureProjectionError, ValidationError
from .geometry import (
    ANGLE_SUM,
    CellConfig,
    DEFAULT_EDGE_LENGTH,
    REST_ANGLES,
    octagon_from_angles,
    octagon_from_angles_batch,
    polygon_is_simple_batch,
)

R_MIN, R_MAX = 0.05, 0.20  # beam radius bounds, mm
H_MIN, H_MAX = 0.02, 0.08  # beam thickness bounds, mm


@dataclass(frozen=True)
class InfillDesign:
    """Eight curved beams: radius, thickness, and bending orientation each.

    Beam k spans octagon vertices k -> k+1 (mod 8).
    """

    radii: np.ndarray  # (8,), mm
    thicknesses: np.ndarray  # (8,), mm
    orientations: np.ndarray  # (8,), +1 or -1

    def __post_init__(self):
        r = np.asarray(self.radii, float)
        h = np.asarray(self.thicknesses, float)
        b = np.asarray(self.orientations, int)
        if r.shape != (8,) or h.shape != (8,) or b.shape != (8,):
            raise ValidationError("infill design requires 8 beams")
        if np.any(r < R_MIN) or np.any(r > R_MAX):
            raise ValidationError(f"beam radius outside [{R_MIN}, {R_MAX}] mm")
        if np.any(h < H_MIN) or np.any(h > H_MAX):
            raise ValidationError(f"beam thickness outside [{H_MIN}, {H_MAX}] mm")
        if not np.all(np.isin(b, (-1, 1))):
            raise ValidationError("beam orientation must be +1 or -1")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "thicknesses", h)
        object.__setattr__(self, "orientations", b)

    def as_vector(self) -> np.ndarray:
        """Flat 24-dim parameter vector (r1..r8, h1..h8, b1..b8)."""
        return np.concatenate([self.radii, self.thicknesses, self.orientations.astype(float)])


@dataclass(frozen=True)
class MaterialParams:
    """Actuation parameters of the active beam material.

    c0 is the dimensionless gain coupling beam curvature to hinge-angle
    increments; its default is calibrated so the reachable per-angle increment
    tops out near +-0.6 rad, keeping raw angles inside (0, 2*pi) for every
    design in bounds.
    """

    delta_alpha: float = 0.003  # CTE contrast, 1/degC
    delta_T: float = 100.0  # degC
    c0: float = 0.05

    def __post_init__(self):
        if self.delta_alpha <= 0:
            raise ValidationError("delta_alpha must be positive")
        if not 0 <= self.delta_T <= 100:
            raise ValidationError("delta_T must lie in [0, 100]")


def beam_curvature(h: float | np.ndarray, mat: MaterialParams) -> float | np.ndarray:
    """Bimorph bending curvature (1/mm) of an equal-layer, equal-modulus beam.

    Timoshenko bimetal curvature with m = n = 1 reduces to
    kappa = 1.5 * delta_alpha * delta_T / h.
    """
    h = np.asarray(h, float)
    if np.any(h <= 0):
        raise ValidationError("beam thickness must be positive")
    kappa = 1.5 * mat.delta_alpha * mat.delta_T / h
    return float(kappa) if kappa.ndim == 0 else kappa


def raw_angle_increments(
    x: InfillDesign, mat: MaterialParams, edge_length: float = DEFAULT_EDGE_LENGTH
) -> np.ndarray:
    """Unconstrained angle increments: each hinge driven by its two incident beams."""
    return raw_angle_increments_batch(
        x.radii[None], x.thicknesses[None], x.orientations[None], mat, edge_length
    )[0]


def raw_angle_increments_batch(
    radii: np.ndarray,
    thicknesses: np.ndarray,
    orientations: np.ndarray,
    mat: MaterialParams,
    edge_length: float = DEFAULT_EDGE_LENGTH,
) -> np.ndarray:
    """Vectorized raw increments for (m, 8) design parameter stacks."""
    kappa = 1.5 * mat.delta_alpha * mat.delta_T / np.asarray(thicknesses, float)
    term = (np.asarray(radii, float) / R_MAX) * np.asarray(orientations, float) * kappa
    # hinge j sits between beams j-1 and j
    return mat.c0 * edge_length * (np.roll(term, 1, axis=-1) + term)


def _closure_constraints(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closure constraints g (m, 3) and Jacobian J (m, 3, 8) for (m, 8) angles.

    g0: interior angles sum to 6*pi. g1, g2: the unit-edge walk closes in x
    and y. Edge headings phi_j depend on angles 1..j only.
    """
    m = theta.shape[0]
    phi = np.concatenate([np.zeros((m, 1)), np.cumsum(np.pi - theta[:, 1:], axis=1)], axis=1)
    cph, sph = np.cos(phi), np.sin(phi)
    g = np.stack([theta.sum(1) - ANGLE_SUM, cph.sum(1), sph.sum(1)], axis=1)
    # suffix sums over j >= k of sin/cos(phi_j); d phi_j / d theta_k = -1 for 1 <= k <= j
    suff_s = np.cumsum(sph[:, ::-1], axis=1)[:, ::-1]
    suff_c = np.cumsum(cph[:, ::-1], axis=1)[:, ::-1]
    J = np.empty((m, 3, 8))
    J[:, 0, :] = 1.0
    J[:, 1, 0] = 0.0
    J[:, 2, 0] = 0.0
    J[:, 1, 1:] = suff_s[:, 1:]
    J[:, 2, 1:] = -suff_c[:, 1:]
    return g, J


def closure_project_batch(
    theta_raw: np.ndarray,
    tol: float = 1e-10,
    step_tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[np.ndarray, np.ndarray]:
    """Project (m, 8) raw angle vectors onto the closure manifold.

    Returns (theta, converged). Solves argmin ||theta - theta_raw||^2 subject
    to the three closure constraints by SQP from the rest-angle seed: each
    step minimizes the distance to theta_raw under linearized constraints.
    """
    target = np.asarray(theta_raw, float)
    m = target.shape[0]
    theta = np.tile(REST_ANGLES, (m, 1))
    active = np.ones(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        th = theta[active]
        g, J = _closure_constraints(th)
        d = target[active] - th
        # delta = d - J^T (J J^T)^-1 (J d + g)
        JJt = J @ np.swapaxes(J, 1, 2)
        rhs = (J @ d[:, :, None])[:, :, 0] + g
        try:
            lam = np.linalg.solve(JJt, rhs[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            break
        delta = d - (np.swapaxes(J, 1, 2) @ lam[:, :, None])[:, :, 0]
        th = th + delta
        theta[active] = th
        g_new, _ = _closure_constraints(th)
        done = (np.abs(g_new).max(axis=1) < tol) & (np.abs(delta).max(axis=1) < step_tol)
        idx = np.nonzero(active)[0]
        converged[idx[done]] = True
        active[idx[done]] = False
    return theta, converged


def closure_project(
    theta_raw: np.ndarray,
    tol: float = 1e-10,
    step_tol: float = 1e-12,
    max_iter: int = 50,
) -> np.ndarray:
    """Nearest closure-feasible angle vector to theta_raw (absolute angles)."""
    t = np.asarray(theta_raw, float)
    if np.any(t <= 0) or np.any(t >= 2 * np.pi):
        raise ValidationError("raw angles must lie strictly inside (0, 2*pi)")
    theta, ok = closure_project_batch(t[None], tol=tol, step_tol=step_tol, max_iter=max_iter)
    if not ok[0]:
        g, _ = _closure_constraints(theta)
        raise ClosureProjectionError(float(np.abs(g).max()))
    return theta[0]


def surrogate_forward(
    x: InfillDesign, mat: MaterialParams, edge_length: float = DEFAULT_EDGE_LENGTH
) -> CellConfig:
    """Deformed cell configuration produced by a design under full actuation."""
    theta = closure_project(REST_ANGLES + raw_angle_increments(x, mat, edge_length))
    coords = octagon_from_angles(theta, edge_length)
    return CellConfig(angles=theta, coords=coords)


def surrogate_forward_batch(
    radii: np.ndarray,
    thicknesses: np.ndarray,
    orientations: np.ndarray,
    mat: MaterialParams,
    edge_length: float = DEFAULT_EDGE_LENGTH,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized forward model for (m, 8) parameter stacks.

    Returns (angles (m, 8), centered coords (m, 8, 2), valid (m,)). A sample
    is invalid if its raw angles leave (0, 2*pi), the projection fails, the
    walk does not close, or the resulting octagon self-intersects.
    """
    raw = REST_ANGLES + raw_angle_increments_batch(
        radii, thicknesses, orientations, mat, edge_length
    )
    in_range = np.all((raw > 0) & (raw < 2 * np.pi), axis=1)
    theta, converged = closure_project_batch(raw)
    coords, residual = octagon_from_angles_batch(theta, edge_length)
    valid = in_range & converged & (residual < 1e-8)
    valid &= polygon_is_simple_batch(coords)
    return theta, coords, valid
