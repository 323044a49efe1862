"""Command-line interface: train a model, sample design tables for conditions."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from morphkit.geometry import REST_ANGLES
from morphkit.microscale import CellAssignment, read_conditions_csv, write_designs_csv
from morphkit.surrogate import InfillDesign

from .diffusion import DiffusionConfig, DiffusionModel, sample_designs, train


def cmd_train(args) -> int:
    config = DiffusionConfig(epochs=args.epochs, seed=args.seed)
    model, result = train(args.dataset, config)
    model.save(args.out_model)
    print(
        f"trained {config.epochs} epochs on {args.dataset}: "
        f"loss {result.first_epoch_loss:.4f} -> {result.final_epoch_loss:.4f}; "
        f"model saved to {args.out_model}"
    )
    if args.holdout:
        from morphkit.configdb import load_dataset_csv

        from .data import load_training_arrays
        from .evaluate import r2_micro_on_conditions

        db = load_dataset_csv(args.dataset)
        _, _, _, cond_te, stats = load_training_arrays(args.dataset, config.seed)
        theta_te = cond_te * stats.cond_scale + REST_ANGLES
        k = min(args.holdout, len(theta_te))
        score, valid = r2_micro_on_conditions(model, theta_te[:k], seed=config.seed)
        print(f"held-out R^2_micro over {k} conditions: {score:.4f} (valid {valid:.1%})")
    return 0


def cmd_sample(args) -> int:
    model = DiffusionModel.load(args.model)
    conditions = read_conditions_csv(args.conditions)
    r, h, b = sample_designs(model, conditions, seed=args.seed)
    assignments = [
        CellAssignment(
            cell_index=ci,
            design=InfillDesign(r[ci], h[ci], b[ci]),
            achieved=None,
            target=None,
            rotation=0.0,
            dissimilarity=0.0,
        )
        for ci in range(len(conditions))
    ]
    write_designs_csv(assignments, args.out)
    print(f"sampled {len(assignments)} designs to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cdm", description="Conditional diffusion model for unit-cell infill designs."
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train on a configuration dataset CSV")
    t.add_argument("--dataset", required=True)
    t.add_argument("--out-model", required=True)
    t.add_argument("--epochs", type=int, default=DiffusionConfig.epochs)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument(
        "--holdout",
        type=int,
        default=0,
        help="also report R^2_micro on this many held-out conditions",
    )
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="generate a designs CSV for a condition table")
    s.add_argument("--model", required=True)
    s.add_argument("--conditions", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
