"""Command-line interface.

Subcommands cover the full workflow: dataset generation, macroscale +
microscale design, dataset retrieval for externally produced condition
tables, assembly evaluation, scaling benchmarks, and SVG rendering.

Exit codes: 0 success, 2 usage error (argparse), 3 invalid input
(ValidationError), 4 numerical failure (NumericalError).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import (
    bench_as,
    bench_conlme,
    bench_crossover,
    rows_to_csv,
    slopes_by_stage,
)
from .configdb import (
    ConfigDatabase,
    generate_dataset,
    load_dataset_csv,
    nearest_config_batch,
    save_dataset_csv,
)
from .conlme import auto_weight_ws
from .errors import NumericalError, ValidationError
from .evaluation import evaluate_assembly
from .geometry import octagon_from_angles_batch
from .mesh import build_mesh, read_positions_csv, write_mesh_csv
from .microscale import (
    import_designs,
    read_conditions_csv,
    read_designs_csv,
    write_assignments_csv,
    write_conditions_csv,
    write_designs_csv,
)
from .render import render_svg
from .taskfile import load_task, save_task


def _limit_threads() -> None:
    """Honor MORPHKIT_THREADS for the BLAS pools behind numpy/scipy."""
    n = os.environ.get("MORPHKIT_THREADS")
    if not n:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=int(n))
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def _load_db(path: str) -> ConfigDatabase:
    if not Path(path).exists():
        raise ValidationError(f"dataset file not found: {path}")
    return load_dataset_csv(path)


def _task_handles(task, mesh):
    handles = {int(v): np.asarray(t, float) for v, t in task.domain.handles}
    overlap = handles.keys() & set(task.domain.fixed)
    if overlap:
        raise ValidationError(f"vertices both handle and fixed: {sorted(overlap)}")
    for vid in task.domain.fixed:
        handles[int(vid)] = mesh.vertices[vid].copy()
    return handles


def cmd_gen_dataset(args) -> int:
    from .configdb import angle_envelope
    from .surrogate import MaterialParams

    if args.n < 1:
        raise ValidationError("--n must be at least 1")
    mat = MaterialParams()
    t0 = time.perf_counter()
    db = generate_dataset(args.n, args.seed, mat, edge_length=args.edge_length)
    save_dataset_csv(db, args.out)
    env = angle_envelope(db)
    print(
        f"wrote {len(db)} records to {args.out} "
        f"({time.perf_counter() - t0:.2f}s, seed={args.seed})"
    )
    print(
        "angle envelope (rad from rest): "
        + " ".join(f"th{j + 1}:[{lo:+.3f},{hi:+.3f}]" for j, (lo, hi) in enumerate(env))
    )
    return 0


def _write_iteration_log(history: list[dict], path: Path) -> None:
    cols = ["iteration", "max_displacement", "E_L", "E_S", "E_t", "total"]
    with open(path, "w") as f:
        f.write(",".join(cols) + "\n")
        for row in history:
            f.write(
                ",".join(
                    str(row["iteration"]) if c == "iteration" else repr(float(row[c]))
                    for c in cols
                )
                + "\n"
            )


def cmd_design(args) -> int:
    wall: list[tuple[str, float]] = []
    t0 = time.perf_counter()
    task = load_task(args.task)
    mesh = build_mesh(task.domain)
    db = _load_db(args.dataset)
    if abs(db.edge_length - task.domain.edge_length) > 1e-12:
        raise ValidationError(
            f"dataset edge length {db.edge_length} != task edge length "
            f"{task.domain.edge_length}"
        )
    handles = _task_handles(task, mesh)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wall.append(("load", time.perf_counter() - t0))

    t0 = time.perf_counter()
    auto = auto_weight_ws(mesh, handles, task.weights, db, task.dissim_threshold)
    state = auto.state
    wall.append(("macroscale", time.perf_counter() - t0))

    save_task(task, out / "task.json")
    write_mesh_csv(mesh, out / "solution.csv", positions=state.positions)
    _write_iteration_log(state.history, out / "iteration_log.csv")
    from .microscale import emit_conditions

    conditions = emit_conditions(state, mesh)
    write_conditions_csv(conditions, out / "conditions.csv")

    summary = {
        "n_vertices": mesh.n_vertices,
        "n_cells": mesh.n_cells,
        "microscale_method": task.microscale_method,
        "weights": {"w_L": auto.weights.w_L, "w_S": auto.weights.w_S, "w_t": auto.weights.w_t},
        "w_S_doublings": auto.doublings,
        "dissim_threshold_mm": task.dissim_threshold,
        "macro_iterations": state.iterations,
        "macro_converged": state.converged,
        "macro_max_dissimilarity_mm": float(state.dissimilarities.max()),
        "macro_max_edge_deviation_mm": float(state.edge_deviation.max()),
        "dissim_threshold_met": auto.met,
    }

    if task.microscale_method == "as" and args.designs is None:
        from .microscale import as_design

        t0 = time.perf_counter()
        assignments, final_state = as_design(mesh, state, db, auto.weights, handles)
        wall.append(("microscale", time.perf_counter() - t0))
        write_mesh_csv(mesh, out / "solution.csv", positions=final_state.positions)
        write_designs_csv(assignments, out / "designs.csv")
        write_assignments_csv(assignments, out / "assignments.csv")
        summary["microscale_max_dissimilarity_mm"] = float(
            max(a.dissimilarity for a in assignments)
        )
    elif args.designs is not None:
        t0 = time.perf_counter()
        rows = read_designs_csv(args.designs)
        assignments, flagged = import_designs(
            conditions, rows, task.material, task.domain.edge_length, task.dissim_threshold
        )
        wall.append(("import", time.perf_counter() - t0))
        write_designs_csv(assignments, out / "designs.csv")
        write_assignments_csv(assignments, out / "assignments.csv")
        summary["microscale_max_dissimilarity_mm"] = float(
            max(a.dissimilarity for a in assignments)
        )
        summary["flagged_cells"] = flagged
    else:
        summary["note"] = (
            "conditions emitted; supply a designs table via --designs to finish"
        )

    with open(out / "solve_summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out / "run_log.txt", "w") as f:
        for stage, sec in wall:
            f.write(f"{stage}: {sec * 1e3:.1f} ms\n")
    print(
        f"design written to {out} "
        f"(cells={mesh.n_cells}, macro iters={state.iterations}, "
        f"max dissim={summary['macro_max_dissimilarity_mm']:.4g} mm)"
    )
    if not state.converged:
        print("warning: macroscale solve did not converge", file=sys.stderr)
        return 4
    return 0


def cmd_retrieve(args) -> int:
    db = _load_db(args.dataset)
    conditions = read_conditions_csv(args.conditions)
    coords, residual = octagon_from_angles_batch(conditions, db.edge_length)
    # Emitted targets come from approximately rigid cells, so a small closure
    # residual is expected; only grossly invalid rows are rejected.
    if residual.max() > 0.5 * db.edge_length:
        raise ValidationError(
            f"condition table has badly non-closing angle rows "
            f"(max residual {residual.max():.2e} mm)"
        )
    coords = coords - coords.mean(axis=1, keepdims=True)
    ids, phi, dis = nearest_config_batch(db, conditions, coords, args.shortlist_k)
    from .microscale import CellAssignment
    from .geometry import CellConfig
    from .surrogate import InfillDesign

    assignments = [
        CellAssignment(
            cell_index=ci,
            design=InfillDesign(db.radii[r], db.thicknesses[r], db.orientations[r]),
            achieved=CellConfig(angles=db.angles[r], coords=db.coords[r]),
            target=CellConfig(angles=conditions[ci], coords=coords[ci]),
            rotation=float(phi[ci]),
            dissimilarity=float(dis[ci]),
            record_id=int(r),
        )
        for ci, r in enumerate(ids)
    ]
    write_designs_csv(assignments, args.out)
    print(
        f"retrieved {len(assignments)} designs to {args.out} "
        f"(max dissim={float(dis.max()):.4g} mm)"
    )
    return 0


def cmd_evaluate(args) -> int:
    sol = Path(args.solution_dir)
    task = load_task(sol / "task.json")
    mesh = build_mesh(task.domain)
    db = _load_db(args.dataset) if args.dataset else None
    conditions = read_conditions_csv(sol / "conditions.csv")
    rows = read_designs_csv(sol / "designs.csv")
    assignments, flagged = import_designs(
        conditions, rows, task.material, task.domain.edge_length, task.dissim_threshold
    )
    handles = {int(v): np.asarray(t, float) for v, t in task.domain.handles}
    report = evaluate_assembly(mesh, assignments, task.domain.fixed, handles, db)

    out = Path(args.out_dir) if args.out_dir else sol
    out.mkdir(parents=True, exist_ok=True)
    scalars = report.scalars()
    scalars["flagged_cells"] = flagged
    with open(out / "report.json", "w") as f:
        json.dump(scalars, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out / "per_cell.csv", "w") as f:
        f.write("cell,dissimilarity,area_change\n")
        for ci in range(mesh.n_cells):
            f.write(
                f"{ci},{float(report.dissimilarity[ci])!r},{float(report.area_change[ci])!r}\n"
            )
    with open(out / "per_edge.csv", "w") as f:
        f.write("v0,v1,deviation\n")
        for (a, b), d in zip(mesh.edges, report.edge_deviation):
            f.write(f"{a},{b},{float(d)!r}\n")
    write_mesh_csv(mesh, out / "deformed.csv", positions=report.positions)
    svg = render_svg(
        mesh,
        positions=report.positions,
        cell_values=report.area_change,
        value_label="cell area change (mm^2)",
        handle_targets=handles,
        fixed_vertices=task.domain.fixed,
    )
    with open(out / "overlay.svg", "w") as f:
        f.write(svg)

    mre = "n/a" if report.mre is None else f"{report.mre:.4f}"
    print(
        f"evaluated {sol}: MAE={report.mae:.4f} mm, MRE={mre}, "
        f"area change={report.total_area_change:+.4%}"
    )
    return 0


def _parse_grids(spec: str) -> list[tuple[int, int]]:
    grids = []
    for part in spec.split(","):
        try:
            r, c = part.lower().split("x")
            grids.append((int(r), int(c)))
        except ValueError:
            raise ValidationError(f"bad grid spec {part!r}; expected ROWSxCOLS") from None
    return grids


def cmd_bench(args) -> int:
    grids = _parse_grids(args.grids)
    amplitudes = [float(a) for a in args.amplitudes.split(",")]
    stages = args.stages.split(",")
    bad = set(stages) - {"conlme", "as", "crossover"}
    if bad:
        raise ValidationError(f"unknown bench stages: {sorted(bad)}")
    rows = []
    db = _load_db(args.dataset) if {"conlme", "as"} & set(stages) else None
    for amp in amplitudes:
        if "conlme" in stages:
            rows += bench_conlme(grids, db, amp, n_iter=args.iters)
        if "as" in stages:
            rows += bench_as(grids, db, amp)
        if "crossover" in stages:
            rows += bench_crossover(grids, args.dataset, args.workdir, amp)
    csv_text = rows_to_csv(rows)
    if args.out:
        with open(args.out, "w") as f:
            f.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    for stage, slope in sorted(slopes_by_stage(rows).items()):
        if slope is None:
            print(f"log-log slope [{stage}]: skipped (need at least 2 grid sizes)")
        else:
            print(f"log-log slope [{stage}]: {slope:.3f}")
    return 0


def cmd_render(args) -> int:
    from .evaluation import diagnostics

    task = load_task(args.task)
    mesh = build_mesh(task.domain)
    positions = read_positions_csv(args.positions) if args.positions else None
    handles = {int(v): np.asarray(t, float) for v, t in task.domain.handles}
    cell_values = edge_values = None
    label = ""
    if args.color:
        if positions is None:
            raise ValidationError("--color requires --positions")
        db = _load_db(args.dataset) if args.dataset else None
        if args.color == "dissimilarity" and db is None:
            raise ValidationError("--color dissimilarity requires --dataset")
        diag = diagnostics(mesh, mesh.vertices, positions, db)
        if args.color == "dissimilarity":
            cell_values, label = diag.dissimilarity, "cell dissimilarity (mm)"
        elif args.color == "edge":
            edge_values, label = diag.edge_deviation, "edge length deviation (mm)"
        else:
            cell_values, label = diag.area_change, "cell area change (mm^2)"
    svg = render_svg(
        mesh,
        positions=positions,
        cell_values=cell_values,
        edge_values=edge_values,
        value_label=label,
        handle_targets=handles or None,
        fixed_vertices=task.domain.fixed or None,
    )
    with open(args.out, "w") as f:
        f.write(svg)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="morphkit",
        description="Two-scale inverse design of shape-morphing linkage sheets.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-dataset", help="generate a unit-cell configuration dataset")
    g.add_argument("--n", type=int, required=True, help="number of records")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--edge-length", type=float, default=0.5, help="bar length, mm")
    g.add_argument("--out", required=True, help="output CSV path")
    g.set_defaults(func=cmd_gen_dataset)

    d = sub.add_parser("design", help="solve a design task end to end")
    d.add_argument("--task", required=True, help="task JSON file")
    d.add_argument("--dataset", required=True, help="configuration dataset CSV")
    d.add_argument("--out-dir", required=True, help="solution bundle directory")
    d.add_argument(
        "--designs",
        default=None,
        help="externally produced designs CSV to import instead of searching",
    )
    d.set_defaults(func=cmd_design)

    r = sub.add_parser("retrieve", help="nearest dataset designs for a condition table")
    r.add_argument("--dataset", required=True)
    r.add_argument("--conditions", required=True, help="conditions CSV (cell,th1..th8)")
    r.add_argument("--out", required=True, help="output designs CSV")
    r.add_argument("--shortlist-k", type=int, default=32)
    r.set_defaults(func=cmd_retrieve)

    e = sub.add_parser("evaluate", help="reconstruct and score a solution bundle")
    e.add_argument("--solution-dir", required=True)
    e.add_argument("--dataset", default=None, help="dataset CSV for dissimilarity diagnostics")
    e.add_argument("--out-dir", default=None, help="report directory (default: solution dir)")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="wall-time scaling benchmarks")
    b.add_argument("--grids", required=True, help="comma list of ROWSxCOLS, e.g. 10x10,20x20")
    b.add_argument("--amplitudes", default="0.2", help="comma list of amplitude factors")
    b.add_argument(
        "--stages",
        default="conlme,as",
        help="comma subset of conlme,as,crossover",
    )
    b.add_argument("--dataset", required=True)
    b.add_argument("--iters", type=int, default=10, help="fixed iteration count (conlme stage)")
    b.add_argument("--workdir", default="bench_work", help="scratch dir (crossover stage)")
    b.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("render", help="render a task (and optional solution) to SVG")
    v.add_argument("--task", required=True)
    v.add_argument("--positions", default=None, help="solution.csv with deformed positions")
    v.add_argument(
        "--color",
        choices=["dissimilarity", "edge", "area"],
        default=None,
        help="diagnostic to color by (requires --positions)",
    )
    v.add_argument("--dataset", default=None, help="dataset CSV (dissimilarity coloring)")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    _limit_threads()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
