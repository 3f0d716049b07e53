"""Knowledge compilation of propositional constraints into smooth,
deterministic, decomposable circuits, with differentiable losses over them:
weighted model counting, semantic loss, constraint-conditioned entropy, and
their exact gradients, plus constraint generators and a desk-scale training
harness."""

from .circuit import (
    Circuit,
    CircuitBuilder,
    NodeCapExceeded,
    StructureReport,
    check_structure,
    circuit_eval,
    circuit_models,
    model_count,
    read_nnf,
    smooth,
    write_nnf,
)
from .compiler import CompileStats, compile, default_order
from .constraints import (
    PIPES,
    GridSpec,
    PathCapExceeded,
    TileRule,
    conditional,
    exactly_one,
    simple_path,
    simple_path_full,
    tile_grid,
    total_order,
)
from .formula import (
    Formula,
    ModelSet,
    and_,
    enumerate_models,
    eval_formula,
    false,
    format_formula,
    iff,
    implies,
    not_,
    or_,
    parse_dimacs,
    parse_formula,
    true,
    var,
    with_var_count,
)
from .queries import (
    EvalTrace,
    batch_query,
    batch_training_losses,
    entropy_gradient,
    evaluate,
    full_entropy,
    nesy_entropy,
    semantic_loss,
    wmc,
    wmc_gradient,
)
from .trainer import (
    Adam,
    CanConfig,
    CanResult,
    Dataset,
    Metrics,
    Mlp,
    TrainConfig,
    TrainResult,
    evaluate_metrics,
    gen_grid_dataset,
    gen_preference_dataset,
    grid_path_formula,
    is_simple_path,
    sample_and_score,
    shortest_path_label,
    train_can,
    train_supervised,
    uniform_models,
)

__all__ = [
    "Adam",
    "CanConfig",
    "CanResult",
    "Circuit",
    "CircuitBuilder",
    "CompileStats",
    "Dataset",
    "EvalTrace",
    "Formula",
    "GridSpec",
    "Metrics",
    "Mlp",
    "ModelSet",
    "NodeCapExceeded",
    "PIPES",
    "PathCapExceeded",
    "StructureReport",
    "TileRule",
    "TrainConfig",
    "TrainResult",
    "and_",
    "batch_query",
    "batch_training_losses",
    "check_structure",
    "circuit_eval",
    "circuit_models",
    "compile",
    "conditional",
    "default_order",
    "entropy_gradient",
    "enumerate_models",
    "eval_formula",
    "evaluate",
    "evaluate_metrics",
    "exactly_one",
    "false",
    "format_formula",
    "full_entropy",
    "gen_grid_dataset",
    "gen_preference_dataset",
    "grid_path_formula",
    "iff",
    "implies",
    "is_simple_path",
    "model_count",
    "nesy_entropy",
    "not_",
    "or_",
    "parse_dimacs",
    "parse_formula",
    "read_nnf",
    "sample_and_score",
    "semantic_loss",
    "shortest_path_label",
    "simple_path",
    "simple_path_full",
    "smooth",
    "tile_grid",
    "total_order",
    "train_can",
    "train_supervised",
    "true",
    "uniform_models",
    "var",
    "with_var_count",
    "wmc",
    "wmc_gradient",
]
