#!/usr/bin/env python3
"""Write the shipped example task files (sinusoid cantilever, checkerboard
beam, octopus mask) as JSON into a target directory."""

import argparse
from pathlib import Path

from morphkit.taskfile import save_task
from morphkit.tasks import checkerboard_beam_task, octopus_task, sinusoid_cantilever_task


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="tasks", help="directory for the task JSON files")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for name, (task, mesh) in {
        "sinusoid_cantilever": sinusoid_cantilever_task(),
        "checkerboard_beam": checkerboard_beam_task(),
        "octopus": octopus_task(),
    }.items():
        path = out / f"{name}.json"
        save_task(task, path)
        print(f"{path}: {mesh.n_cells} cells, {mesh.n_vertices} vertices")


if __name__ == "__main__":
    main()
