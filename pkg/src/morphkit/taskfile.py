"""Strict JSON task files describing a design problem end to end."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .conlme import SolverWeights
from .errors import ValidationError
from .mesh import DomainSpec
from .surrogate import MaterialParams

MICROSCALE_METHODS = ("as", "external-designs")


@dataclass
class TaskFile:
    domain: DomainSpec
    weights: SolverWeights
    material: MaterialParams
    microscale_method: str = "as"
    dissim_threshold: float = 0.05  # mm
    seed: int = 0

    def __post_init__(self):
        if self.microscale_method not in MICROSCALE_METHODS:
            raise ValidationError(
                f"microscale_method must be one of {MICROSCALE_METHODS}"
            )
        if self.dissim_threshold <= 0:
            raise ValidationError("dissim_threshold must be positive")


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {sorted(unknown)}")


def task_from_dict(data: dict) -> TaskFile:
    if not isinstance(data, dict):
        raise ValidationError("task file must contain a JSON object")
    _check_keys(
        data,
        {"domain", "weights", "material", "microscale_method", "dissim_threshold", "seed"},
        "task",
    )
    if "domain" not in data:
        raise ValidationError("task file requires a 'domain' section")
    dom = data["domain"]
    _check_keys(dom, {"rows", "cols", "occupancy", "edge_length", "handles", "fixed"}, "domain")
    try:
        handles = [(int(v), (float(t[0]), float(t[1]))) for v, t in dom.get("handles", [])]
    except (TypeError, ValueError, IndexError) as e:
        raise ValidationError(f"malformed handles list: {e}") from e
    domain = DomainSpec(
        rows=int(dom["rows"]),
        cols=int(dom["cols"]),
        occupancy=np.asarray(dom["occupancy"], bool),
        edge_length=float(dom.get("edge_length", 0.5)),
        handles=handles,
        fixed=[int(v) for v in dom.get("fixed", [])],
    )
    wd = data.get("weights", {})
    _check_keys(wd, {"w_L", "w_S", "w_t"}, "weights")
    weights = SolverWeights(
        w_L=float(wd.get("w_L", 1.0)), w_S=float(wd.get("w_S", 1.0)), w_t=float(wd.get("w_t", 1e3))
    )
    md = data.get("material", {})
    _check_keys(md, {"delta_alpha", "delta_T", "c0"}, "material")
    material = MaterialParams(
        delta_alpha=float(md.get("delta_alpha", 0.003)),
        delta_T=float(md.get("delta_T", 100.0)),
        c0=float(md.get("c0", 0.05)),
    )
    return TaskFile(
        domain=domain,
        weights=weights,
        material=material,
        microscale_method=str(data.get("microscale_method", "as")),
        dissim_threshold=float(data.get("dissim_threshold", 0.05)),
        seed=int(data.get("seed", 0)),
    )


def task_to_dict(task: TaskFile) -> dict:
    return {
        "domain": {
            "rows": task.domain.rows,
            "cols": task.domain.cols,
            "occupancy": task.domain.occupancy.astype(bool).tolist(),
            "edge_length": task.domain.edge_length,
            "handles": [[int(v), [float(t[0]), float(t[1])]] for v, t in task.domain.handles],
            "fixed": [int(v) for v in task.domain.fixed],
        },
        "weights": {"w_L": task.weights.w_L, "w_S": task.weights.w_S, "w_t": task.weights.w_t},
        "material": {
            "delta_alpha": task.material.delta_alpha,
            "delta_T": task.material.delta_T,
            "c0": task.material.c0,
        },
        "microscale_method": task.microscale_method,
        "dissim_threshold": task.dissim_threshold,
        "seed": task.seed,
    }


def load_task(path) -> TaskFile:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"task file {path} is not valid JSON: {e}") from e
    return task_from_dict(data)


def save_task(task: TaskFile, path) -> None:
    with open(path, "w") as f:
        json.dump(task_to_dict(task), f, indent=2, sort_keys=True)
        f.write("\n")
