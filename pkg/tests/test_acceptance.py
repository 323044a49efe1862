"""Acceptance criteria for the two-scale design pipeline.

Each criterion prints exactly one PASS/FAIL line to the real stdout (pytest
capture is suspended around the print) so the acceptance status is visible in
every run, then asserts.
"""

import numpy as np
import pytest

from morphkit.bench import bench_as, bench_conlme, bench_crossover, slopes_by_stage
from morphkit.configdb import nearest_config_batch, sample_designs
from morphkit.conlme import (
    SolverWeights,
    assemble_system,
    auto_weight_ws,
    conlme_solve,
    solve_step,
)
from morphkit.evaluation import evaluate_assembly, mae_mre
from morphkit.geometry import (
    ANGLE_SUM,
    octagon_from_angles_batch,
    rotation_matrix,
)
from morphkit.mesh import DomainSpec, build_mesh
from morphkit.microscale import as_design
from morphkit.surrogate import surrogate_forward_batch
from morphkit.tasks import checkerboard_beam_task, octopus_task, sinusoid_cantilever_task


@pytest.fixture
def report(capfd):
    """One PASS/FAIL line per criterion on the real stdout."""

    def _report(name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        with capfd.disabled():
            print(f"{status} [{name}]" + (f": {detail}" if detail else ""), flush=True)

    return _report


def full_grid(rows, cols):
    return build_mesh(DomainSpec(rows=rows, cols=cols, occupancy=np.ones((rows, cols), bool)))


def _task_handles(task, mesh):
    handles = {int(v): np.asarray(t, float) for v, t in task.domain.handles}
    handles.update({int(v): mesh.vertices[v].copy() for v in task.domain.fixed})
    return handles


@pytest.fixture(scope="session")
def e2e(db20k):
    """Full pipeline on the 20x10 sinusoid cantilever, amplitude 0.5x width."""
    task, mesh = sinusoid_cantilever_task(n_cols=20, n_rows=10, amplitude_factor=0.5)
    handles = _task_handles(task, mesh)
    auto = auto_weight_ws(mesh, handles, task.weights, db20k, task.dissim_threshold)
    assignments, final_state = as_design(mesh, auto.state, db20k, auto.weights, handles)
    report = evaluate_assembly(
        mesh,
        assignments,
        task.domain.fixed,
        {int(v): np.asarray(t, float) for v, t in task.domain.handles},
        db20k,
    )
    return {
        "task": task,
        "mesh": mesh,
        "auto": auto,
        "assignments": assignments,
        "final_state": final_state,
        "report": report,
    }


# Published benchmark rows: (case, MAE mm, L_c mm, printed MRE %).
TABLE1 = [
    ("airfoil tail drop", 0.4586, 9.27, 4.95),
    ("octopus", 1.9326, 8.49, 22.75),
    ("airfoil shape change 1", 1.6168, 5.77, 27.56),
    ("airfoil shape change 2", 1.8023, 12.42, 16.60),
    ("tweezers", 1.2728, 10.30, 12.36),
    ("checkerboard beam", 0.3283, 10.30, 3.19),
]
# Rows whose printed MRE disagrees with MAE / L_c by more than 0.01 pp; they
# are reported rather than force-matched.
TABLE1_DISCREPANT = {"octopus", "airfoil shape change 1", "airfoil shape change 2"}


def test_metric_reproduction(report):
    flagged = []
    for case, mae_v, l_c, printed_pct in TABLE1:
        # synthetic two-handle displacement tables realizing the (MAE, L_c) pair
        t = np.array([[l_c, 0.0], [l_c, 0.0]])
        a = t - np.array([[mae_v, 0.0], [mae_v, 0.0]])
        mae, mre, got_lc = mae_mre(t, a)
        assert mae == pytest.approx(mae_v, abs=1e-12)
        assert got_lc == pytest.approx(l_c, abs=1e-12)
        if abs(100 * mre - printed_pct) > 0.01:
            flagged.append(f"{case} (printed {printed_pct}%, computed {100 * mre:.4f}%)")
    names = {f.split(" (")[0] for f in flagged}
    ok = names == TABLE1_DISCREPANT
    report(
        "metric reproduction",
        ok,
        f"{len(TABLE1) - len(flagged)}/{len(TABLE1)} rows match within 0.01 pp; "
        f"discrepant rows reported: {flagged}",
    )
    assert ok, f"unexpected discrepancy set: {flagged}"


def test_oracle_equivalence(report):
    rng = np.random.default_rng(20240)
    worst = 0.0
    for _ in range(50):
        rows, cols = rng.integers(1, 4, 2)
        mesh = full_grid(rows, cols)
        w = SolverWeights(
            w_L=float(rng.uniform(0.1, 5)),
            w_S=float(rng.uniform(0.1, 5)),
            w_t=float(rng.uniform(10, 1e4)),
        )
        handle_ids = np.unique(rng.integers(mesh.n_vertices, size=int(rng.integers(1, 4))))
        b_D = rng.normal(0, 0.2, (8 * mesh.n_cells, 2))
        b_t = mesh.vertices[handle_ids] + rng.normal(0, 0.3, (len(handle_ids), 2))
        system = assemble_system(mesh, w, handle_ids)
        got = solve_step(system, b_D, b_t)
        # dense least-squares oracle via the normal equations
        from morphkit.conlme import assemble_consistency, assemble_laplacian

        L_L = assemble_laplacian(mesh).toarray()
        L_S = assemble_consistency(mesh).toarray()
        sel = np.zeros((mesh.n_vertices, mesh.n_vertices))
        sel[handle_ids, handle_ids] = 1.0
        A = w.w_L * L_L.T @ L_L + w.w_S * L_S.T @ L_S + w.w_t * sel
        rhs = w.w_S * L_S.T @ b_D
        rhs[handle_ids] += w.w_t * b_t
        ref = np.linalg.solve(A, rhs)
        worst = max(worst, float(np.abs(got - ref).max() / max(np.abs(ref).max(), 1.0)))
    ok = worst < 1e-8
    report("oracle equivalence", ok, f"max relative deviation {worst:.2e} over 50 settings")
    assert ok


def test_rotation_invariant_retrieval(db20k, report):
    rng = np.random.default_rng(77)
    n = 1000
    idx = rng.integers(len(db20k), size=n)
    angles = db20k.angles[idx]
    phis = rng.uniform(-np.pi, np.pi, n)
    coords = np.einsum("nij,nkj->nki", np.stack([rotation_matrix(p) for p in phis]), db20k.coords[idx])
    ids, _, dis = nearest_config_batch(db20k, angles, coords, shortlist_k=32)
    hits = (ids == idx) & (dis < 1e-8)
    rate = float(hits.mean())
    ok = rate >= 0.999
    report(
        "rotation-invariant retrieval",
        ok,
        f"{hits.sum()}/{n} rotated records recovered with dissimilarity < 1e-8 ({rate:.2%})",
    )
    assert ok


def test_surrogate_validity(mat, report):
    r, h, b = sample_designs(10_000, 123)
    theta, coords, valid = surrogate_forward_batch(r, h, b, mat, 0.5)
    discard = 1.0 - float(valid.mean())
    sums = np.abs(theta[valid].sum(axis=1) - ANGLE_SUM)
    _, closure = octagon_from_angles_batch(theta[valid], 0.5)
    ok = discard < 0.10 and sums.max() < 1e-8 and closure.max() < 1e-8
    report(
        "surrogate validity",
        ok,
        f"discard rate {discard:.2%}; max |sum(theta) - 6pi| {sums.max():.2e}; "
        f"max closure residual {closure.max():.2e} mm over {int(valid.sum())} valid designs",
    )
    assert ok


def test_scaling(db20k, tmp_path, report):
    conlme_rows = bench_conlme(
        [(10, 10), (20, 20), (40, 40), (80, 80), (100, 100)], db20k, n_iter=10
    )
    as_rows = bench_as([(5, 5), (10, 10), (20, 20), (40, 40)], db20k)
    from morphkit.configdb import save_dataset_csv

    db_path = tmp_path / "db20k.csv"
    save_dataset_csv(db20k, db_path)
    xo_rows = bench_crossover([(5, 5), (9, 9)], str(db_path), str(tmp_path / "xo"))
    slopes = slopes_by_stage(conlme_rows + as_rows)
    xo = {}
    for row in xo_rows:
        xo.setdefault(row.cells, {})[row.stage] = row.wall_ms
    crossover_ok = all(v["as_cli"] < v["emit_retrieve_cli"] for v in xo.values())
    conlme_ok = 0.8 <= slopes["conlme"] <= 1.3
    as_ok = slopes["as"] >= 1.5
    ok = conlme_ok and as_ok and crossover_ok
    report(
        "scaling",
        ok,
        f"ConLME slope {slopes['conlme']:.3f} (need [0.8, 1.3]); "
        f"AS slope {slopes['as']:.3f} (need >= 1.5); "
        f"AS faster than emit+retrieve below 100 cells: {crossover_ok} "
        + str({c: f"{v['as_cli']:.0f}ms vs {v['emit_retrieve_cli']:.0f}ms" for c, v in xo.items()}),
    )
    assert ok


def test_end_to_end_sinusoid(e2e, report):
    ev = e2e["report"]
    auto = e2e["auto"]
    converged = auto.state.converged
    mre_ok = ev.mre is not None and ev.mre <= 0.25
    dissim_ok = auto.met  # per-cell max dissimilarity <= the auto-weight threshold
    area_ok = ev.total_area_change < 0 and abs(ev.total_area_change) < 0.05
    ok = converged and mre_ok and dissim_ok and area_ok
    report(
        "end-to-end sinusoid",
        ok,
        f"converged={converged}; MRE={100 * ev.mre:.2f}% (need <= 25%); "
        f"max dissim {float(auto.state.dissimilarities.max()):.4f} mm <= "
        f"{e2e['task'].dissim_threshold} mm: {dissim_ok}; "
        f"area change {ev.total_area_change:+.2%} (need negative, |.| < 5%)",
    )
    assert ok


def test_energy_monotonicity(e2e, db20k, report):
    histories = [e2e["auto"].state.history, e2e["final_state"].history]
    for task, mesh in (checkerboard_beam_task(), octopus_task()):
        handles = _task_handles(task, mesh)
        state = conlme_solve(mesh, handles, task.weights, db20k)
        histories.append(state.history)
    worst = -np.inf
    for hist in histories:
        totals = np.array([h["total"] for h in hist])
        if len(totals) >= 2:
            worst = max(worst, float(np.diff(totals).max()))
    ok = worst <= 1e-9
    report(
        "energy monotonicity",
        ok,
        f"max energy increase between iterations {worst:.2e} over {len(histories)} runs",
    )
    assert ok


def test_determinism(tmp_path, report):
    from morphkit.cli import main
    from morphkit.taskfile import save_task

    task, _ = sinusoid_cantilever_task(n_cols=4, n_rows=2, amplitude_factor=0.15)
    task_path = tmp_path / "task.json"
    save_task(task, task_path)
    db_a, db_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["gen-dataset", "--n", "300", "--seed", "6", "--out", str(db_a)]) == 0
    assert main(["gen-dataset", "--n", "300", "--seed", "6", "--out", str(db_b)]) == 0
    gen_same = db_a.read_bytes() == db_b.read_bytes()

    outs = []
    for tag in ("r1", "r2"):
        out = tmp_path / tag
        assert main(["design", "--task", str(task_path), "--dataset", str(db_a),
                     "--out-dir", str(out)]) == 0
        outs.append(out)
    artifacts = ["task.json", "solution.csv", "conditions.csv", "designs.csv",
                 "assignments.csv", "iteration_log.csv", "solve_summary.json"]
    diff = [n for n in artifacts if (outs[0] / n).read_bytes() != (outs[1] / n).read_bytes()]
    ok = gen_same and not diff
    report(
        "determinism",
        ok,
        f"gen-dataset byte-identical: {gen_same}; design artifacts differing: {diff or 'none'} "
        "(run_log.txt holds wall times and is excluded)",
    )
    assert ok
