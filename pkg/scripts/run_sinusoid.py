#!/usr/bin/env python3
"""End-to-end demo: generate a dataset, solve the sinusoid cantilever with
adjustable search, evaluate the assembly, and render the result."""

import argparse
import subprocess
import sys
from pathlib import Path

from morphkit.taskfile import save_task
from morphkit.tasks import sinusoid_cantilever_task


def run(*cmd: str) -> None:
    print("+", " ".join(cmd))
    subprocess.run(cmd, check=True)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="sinusoid_run")
    ap.add_argument("--n", type=int, default=20000, help="dataset size")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    task, _ = sinusoid_cantilever_task()
    task_path = out / "task.json"
    save_task(task, task_path)
    dataset = out / "dataset.csv"

    exe = [sys.executable, "-m", "morphkit.cli"]
    run(*exe, "gen-dataset", "--n", str(args.n), "--seed", str(args.seed),
        "--out", str(dataset))
    run(*exe, "design", "--task", str(task_path), "--dataset", str(dataset),
        "--out-dir", str(out / "solution"))
    run(*exe, "evaluate", "--solution-dir", str(out / "solution"),
        "--dataset", str(dataset))
    run(*exe, "render", "--task", str(task_path),
        "--positions", str(out / "solution" / "solution.csv"),
        "--color", "area", "--out", str(out / "solution.svg"))
    print(f"done; see {out / 'solution' / 'report.json'}")


if __name__ == "__main__":
    main()
