"""Scaling benchmarks: wall time vs cell count with log-log slope fits.

The macroscale protocol times assembly + factorization + a fixed number of
alternation iterations on the sinusoid cantilever family, so the measured
quantity is cost per problem, not iteration count. The adjustable-search
protocol times the full greedy microscale pass. The crossover comparison runs
the real CLI workflows as subprocesses, because the emit+retrieve route is a
staged multi-process pipeline in practice (each stage reloads the dataset).
"""

from __future__ import annotations

import subprocess
import sys
import time
from dataclasses import dataclass

import numpy as np

from .configdb import ConfigDatabase
from .conlme import (
    SolverWeights,
    assemble_consistency,
    assemble_laplacian,
    assemble_system,
    assign_cells,
    cell_targets,
    conlme_solve,
    solve_step,
)
from .mesh import build_mesh
from .microscale import as_design
from .tasks import sinusoid_cantilever_task


@dataclass
class BenchRow:
    cells: int
    stage: str
    wall_ms: float


def fit_loglog_slope(cells, wall_ms) -> float | None:
    """Least-squares slope of log(time) vs log(cells); None below 2 points."""
    x = np.asarray(cells, float)
    y = np.asarray(wall_ms, float)
    if len(x) < 2:
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _task_handles(task, mesh):
    handles = {vid: np.asarray(t, float) for vid, t in task.domain.handles}
    handles.update({vid: mesh.vertices[vid].copy() for vid in task.domain.fixed})
    return handles


def bench_conlme(
    grids: list[tuple[int, int]],
    db: ConfigDatabase,
    amplitude_factor: float = 0.2,
    n_iter: int = 10,
    weights: SolverWeights | None = None,
) -> list[BenchRow]:
    """Assemble + factorize + n_iter alternation iterations per grid."""
    rows = []
    for n_rows, n_cols in grids:
        task, mesh = sinusoid_cantilever_task(
            n_cols=n_cols, n_rows=n_rows, amplitude_factor=amplitude_factor
        )
        handles = _task_handles(task, mesh)
        handle_ids = np.array(sorted(handles))
        b_t = np.array([handles[i] for i in handle_ids])
        w = weights or SolverWeights()
        t0 = time.perf_counter()
        L_L = assemble_laplacian(mesh)
        L_S = assemble_consistency(mesh)
        system = assemble_system(mesh, w, handle_ids, L_L=L_L, L_S=L_S)
        positions = solve_step(
            assemble_system(mesh, w.replace(w_S=0.0), handle_ids, L_L=L_L, L_S=L_S),
            np.zeros((8 * mesh.n_cells, 2)),
            b_t,
        )
        ids = None
        for _ in range(n_iter):
            ids, phi, _ = assign_cells(db, mesh, positions, prev_ids=ids)
            positions = solve_step(system, cell_targets(db, ids, phi), b_t)
        rows.append(BenchRow(mesh.n_cells, "conlme", (time.perf_counter() - t0) * 1e3))
    return rows


def bench_as(
    grids: list[tuple[int, int]],
    db: ConfigDatabase,
    amplitude_factor: float = 0.2,
) -> list[BenchRow]:
    """Full macroscale solve + greedy adjustable search per grid."""
    rows = []
    for n_rows, n_cols in grids:
        task, mesh = sinusoid_cantilever_task(
            n_cols=n_cols, n_rows=n_rows, amplitude_factor=amplitude_factor
        )
        handles = _task_handles(task, mesh)
        t0 = time.perf_counter()
        state = conlme_solve(mesh, handles, task.weights, db, max_iter=50)
        as_design(mesh, state, db, task.weights, handles)
        rows.append(BenchRow(mesh.n_cells, "as", (time.perf_counter() - t0) * 1e3))
    return rows


def _run(cmd: list[str]) -> float:
    t0 = time.perf_counter()
    subprocess.run(cmd, check=True, capture_output=True)
    return (time.perf_counter() - t0) * 1e3


def bench_crossover(
    grids: list[tuple[int, int]],
    dataset_path: str,
    workdir: str,
    amplitude_factor: float = 0.2,
) -> list[BenchRow]:
    """CLI wall time of the AS workflow vs the staged emit+retrieve workflow."""
    from pathlib import Path

    from .taskfile import save_task

    rows = []
    exe = [sys.executable, "-m", "morphkit.cli"]
    for n_rows, n_cols in grids:
        task, mesh = sinusoid_cantilever_task(
            n_cols=n_cols, n_rows=n_rows, amplitude_factor=amplitude_factor
        )
        tag = f"{n_rows}x{n_cols}"
        base = Path(workdir)
        base.mkdir(parents=True, exist_ok=True)

        task.microscale_method = "as"
        as_task = base / f"as_{tag}.json"
        save_task(task, as_task)
        out_as = base / f"as_{tag}"
        t_as = _run(exe + ["design", "--task", str(as_task), "--dataset", dataset_path,
                           "--out-dir", str(out_as)])
        rows.append(BenchRow(mesh.n_cells, "as_cli", t_as))

        task.microscale_method = "external-designs"
        ext_task = base / f"ext_{tag}.json"
        save_task(task, ext_task)
        out_ext = base / f"ext_{tag}"
        t_emit = _run(exe + ["design", "--task", str(ext_task), "--dataset", dataset_path,
                             "--out-dir", str(out_ext)])
        t_ret = _run(exe + ["retrieve", "--dataset", dataset_path,
                            "--conditions", str(out_ext / "conditions.csv"),
                            "--out", str(out_ext / "designs.csv")])
        t_imp = _run(exe + ["design", "--task", str(ext_task), "--dataset", dataset_path,
                            "--out-dir", str(out_ext), "--designs", str(out_ext / "designs.csv")])
        rows.append(BenchRow(mesh.n_cells, "emit_retrieve_cli", t_emit + t_ret + t_imp))
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    out = ["cells,stage,wall_ms"]
    out += [f"{r.cells},{r.stage},{r.wall_ms:.3f}" for r in rows]
    return "\n".join(out) + "\n"


def slopes_by_stage(rows: list[BenchRow]) -> dict[str, float | None]:
    stages: dict[str, list[BenchRow]] = {}
    for r in rows:
        stages.setdefault(r.stage, []).append(r)
    return {
        s: fit_loglog_slope([r.cells for r in rs], [r.wall_ms for r in rs])
        for s, rs in stages.items()
    }
