"""Linkage-mesh construction over an occupancy grid of square unit cells.

Each occupied grid cell becomes one octagonal cell whose boundary consists of
eight rigid bars: two bars per square side, hinged at the side midpoint. The
cell pitch is twice the bar length, and vertices shared between adjacent
occupied cells are stored once.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import CellConfig, DEFAULT_EDGE_LENGTH, angles_from_coords

# Offsets of a cell's 8 vertices on the half-pitch integer lattice, CCW from
# the bottom-left corner: corner, midpoint, corner, midpoint, ...
_CELL_OFFSETS = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)]


@dataclass
class DomainSpec:
    """Design task domain: occupancy grid, handles, and fixed vertices."""

    rows: int
    cols: int
    occupancy: np.ndarray  # (rows, cols) bool, row 0 at the bottom
    edge_length: float = DEFAULT_EDGE_LENGTH
    handles: list[tuple[int, tuple[float, float]]] = field(default_factory=list)
    fixed: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, bool)
        if self.occupancy.shape != (self.rows, self.cols):
            raise ValidationError(
                f"occupancy shape {self.occupancy.shape} != ({self.rows}, {self.cols})"
            )
        if self.edge_length <= 0:
            raise ValidationError("edge_length must be positive")
        if not self.occupancy.any():
            raise ValidationError("occupancy grid has no occupied cell")
        comps = _components(self.occupancy)
        if len(comps) > 1:
            raise ValidationError(
                "occupied cells split into %d disconnected components: %s"
                % (len(comps), "; ".join(str(sorted(c)) for c in comps))
            )


def _components(occ: np.ndarray) -> list[set[tuple[int, int]]]:
    """Edge-connected components of the occupied cell set."""
    todo = {(r, c) for r, c in zip(*np.nonzero(occ))}
    comps = []
    while todo:
        stack = [todo.pop()]
        comp = set(stack)
        while stack:
            r, c = stack.pop()
            for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
                if (nr, nc) in todo:
                    todo.remove((nr, nc))
                    comp.add((nr, nc))
                    stack.append((nr, nc))
        comps.append(comp)
    return comps


@dataclass
class LinkageMesh:
    """Immutable linkage mechanism: hinge vertices, rigid bars, octagonal cells."""

    vertices: np.ndarray  # (N, 2) rest positions, mm
    edges: np.ndarray  # (E, 2) vertex-id pairs
    rest_lengths: np.ndarray  # (E,)
    cells: np.ndarray  # (C, 8) vertex ids, CCW from bottom-left corner
    vertex_role: list[str]  # "corner" | "midpoint"
    edge_length: float
    cell_grid: list[tuple[int, int]]  # (row, col) of each cell
    lattice_ids: dict[tuple[int, int], int]  # half-pitch lattice key -> vertex id

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def adjacency(self) -> list[np.ndarray]:
        if not hasattr(self, "_adjacency"):
            adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
            for a, b in self.edges:
                adj[a].append(b)
                adj[b].append(a)
            self._adjacency = [np.array(sorted(n), dtype=int) for n in adj]
        return self._adjacency

    def vertex_id_at(self, ix: int, iy: int) -> int:
        """Vertex id at half-pitch lattice coordinates (units of edge_length)."""
        try:
            return self.lattice_ids[(ix, iy)]
        except KeyError:
            raise ValidationError(f"no vertex at lattice position ({ix}, {iy})") from None

    def cell_coords(self, positions: np.ndarray | None = None) -> np.ndarray:
        """Per-cell vertex positions, shape (C, 8, 2)."""
        pos = self.vertices if positions is None else np.asarray(positions, float)
        return pos[self.cells]

    def cell_coords_centered(self, positions: np.ndarray | None = None) -> np.ndarray:
        cc = self.cell_coords(positions)
        return cc - cc.mean(axis=1, keepdims=True)


def build_mesh(spec: DomainSpec) -> LinkageMesh:
    """Build the deduplicated linkage mesh for an occupancy grid.

    Vertex ids are assigned in order of first use while scanning occupied
    cells row-major from the bottom-left, which makes the numbering (and every
    downstream artifact) deterministic.
    """
    ids: dict[tuple[int, int], int] = {}
    verts: list[tuple[int, int]] = []
    cells: list[list[int]] = []
    cell_grid: list[tuple[int, int]] = []
    edge_set: dict[tuple[int, int], None] = {}

    for r in range(spec.rows):
        for c in range(spec.cols):
            if not spec.occupancy[r, c]:
                continue
            ring = []
            for dx, dy in _CELL_OFFSETS:
                key = (2 * c + dx, 2 * r + dy)
                if key not in ids:
                    ids[key] = len(verts)
                    verts.append(key)
                ring.append(ids[key])
            for j in range(8):
                a, b = ring[j], ring[(j + 1) % 8]
                edge_set.setdefault((min(a, b), max(a, b)))
            cells.append(ring)
            cell_grid.append((r, c))

    positions = np.array(verts, float) * spec.edge_length
    roles = ["corner" if (k[0] % 2 == 0 and k[1] % 2 == 0) else "midpoint" for k in verts]
    edges = np.array(sorted(edge_set), dtype=int)
    mesh = LinkageMesh(
        vertices=positions,
        edges=edges,
        rest_lengths=np.full(len(edges), spec.edge_length),
        cells=np.array(cells, dtype=int),
        vertex_role=roles,
        edge_length=spec.edge_length,
        cell_grid=cell_grid,
        lattice_ids=ids,
    )
    n = mesh.n_vertices
    for vid, _ in spec.handles:
        if not 0 <= vid < n:
            raise ValidationError(f"handle vertex id {vid} not in mesh (N={n})")
    for vid in spec.fixed:
        if not 0 <= vid < n:
            raise ValidationError(f"fixed vertex id {vid} not in mesh (N={n})")
    return mesh


def extract_cell_config(
    mesh: LinkageMesh, cell_index: int, positions: np.ndarray | None = None
) -> CellConfig:
    """CellConfig of one cell at the given (or rest) vertex positions.

    On intermediate, non-converged position fields the result may violate the
    edge-length and closure invariants; those violations are diagnostic
    quantities, not errors.
    """
    ring = mesh.cells[cell_index]
    pos = mesh.vertices if positions is None else np.asarray(positions, float)
    coords = pos[ring]
    coords = coords - coords.mean(axis=0)
    return CellConfig(angles=angles_from_coords(coords), coords=coords)


def edge_lengths(mesh: LinkageMesh, positions: np.ndarray | None = None) -> np.ndarray:
    pos = mesh.vertices if positions is None else np.asarray(positions, float)
    d = pos[mesh.edges[:, 0]] - pos[mesh.edges[:, 1]]
    return np.hypot(d[:, 0], d[:, 1])


def write_mesh_csv(mesh: LinkageMesh, path_or_buf, positions: np.ndarray | None = None) -> None:
    """Sectioned CSV export: VERTICES (id,x,y,role), EDGES, CELLS."""
    pos = mesh.vertices if positions is None else np.asarray(positions, float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["VERTICES"])
    w.writerow(["id", "x", "y", "role"])
    for i, (x, y) in enumerate(pos):
        w.writerow([i, repr(float(x)), repr(float(y)), mesh.vertex_role[i]])
    w.writerow(["EDGES"])
    w.writerow(["v0", "v1", "rest_length"])
    for (a, b), L in zip(mesh.edges, mesh.rest_lengths):
        w.writerow([a, b, repr(float(L))])
    w.writerow(["CELLS"])
    w.writerow([f"c{i}" for i in range(8)])
    for ring in mesh.cells:
        w.writerow(list(ring))
    data = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(data)
    else:
        with open(path_or_buf, "w") as f:
            f.write(data)


def read_positions_csv(path) -> np.ndarray:
    """Read the VERTICES section of a mesh/solution CSV back into an (N, 2) array."""
    rows = []
    with open(path) as f:
        section = None
        for rec in csv.reader(f):
            if not rec:
                continue
            if rec[0] in ("VERTICES", "EDGES", "CELLS"):
                section = rec[0]
                continue
            if section == "VERTICES" and rec[0] != "id":
                rows.append((int(rec[0]), float(rec[1]), float(rec[2])))
    rows.sort()
    return np.array([(x, y) for _, x, y in rows])
