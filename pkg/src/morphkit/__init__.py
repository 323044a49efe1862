"""Two-scale inverse design of shape-morphing linkage sheets.

Macroscale: constrained Laplacian mesh editing over a linkage mesh of
octagonal unit cells. Microscale: dataset-driven retrieval of per-cell infill
designs whose thermally actuated deformation realizes the macroscale targets.
"""

from .configdb import (
    ConfigDatabase,
    ConfigRecord,
    generate_dataset,
    load_dataset_csv,
    nearest_config,
    nearest_config_batch,
    sample_designs,
    save_dataset_csv,
    verify_dataset,
)
from .conlme import (
    AutoWeightResult,
    ConlmeState,
    SolverWeights,
    auto_weight_ws,
    conlme_solve,
)
from .errors import (
    ClosureError,
    ClosureProjectionError,
    DivergenceError,
    GeometryError,
    MorphkitError,
    NumericalError,
    ValidationError,
)
from .evaluation import (
    EvaluationReport,
    assemble_evaluate,
    evaluate_assembly,
    mae_mre,
    r2_macro,
    r2_micro,
)
from .geometry import (
    CellConfig,
    DEFAULT_EDGE_LENGTH,
    REST_ANGLES,
    cell_area,
    interior_angles,
    octagon_from_angles,
    procrustes_align,
)
from .mesh import DomainSpec, LinkageMesh, build_mesh, extract_cell_config
from .microscale import (
    CellAssignment,
    as_design,
    emit_conditions,
    import_designs,
    read_conditions_csv,
    read_designs_csv,
    search_order,
    write_conditions_csv,
    write_designs_csv,
)
from .surrogate import (
    InfillDesign,
    MaterialParams,
    beam_curvature,
    closure_project,
    surrogate_forward,
)
from .taskfile import TaskFile, load_task, save_task

__all__ = [
    "AutoWeightResult",
    "CellAssignment",
    "CellConfig",
    "ClosureError",
    "ClosureProjectionError",
    "ConfigDatabase",
    "ConfigRecord",
    "ConlmeState",
    "DEFAULT_EDGE_LENGTH",
    "DivergenceError",
    "DomainSpec",
    "EvaluationReport",
    "GeometryError",
    "InfillDesign",
    "LinkageMesh",
    "MaterialParams",
    "MorphkitError",
    "NumericalError",
    "REST_ANGLES",
    "SolverWeights",
    "TaskFile",
    "ValidationError",
    "as_design",
    "assemble_evaluate",
    "auto_weight_ws",
    "beam_curvature",
    "build_mesh",
    "cell_area",
    "closure_project",
    "conlme_solve",
    "emit_conditions",
    "evaluate_assembly",
    "extract_cell_config",
    "generate_dataset",
    "import_designs",
    "interior_angles",
    "load_dataset_csv",
    "load_task",
    "mae_mre",
    "nearest_config",
    "nearest_config_batch",
    "octagon_from_angles",
    "procrustes_align",
    "r2_macro",
    "r2_micro",
    "read_conditions_csv",
    "read_designs_csv",
    "sample_designs",
    "save_dataset_csv",
    "save_task",
    "search_order",
    "surrogate_forward",
    "verify_dataset",
    "write_conditions_csv",
    "write_designs_csv",
]
