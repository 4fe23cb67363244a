"""Random-walk neural networks on simplicial complexes."""

from .complex import (
    ConnectionTable,
    NeighborTable,
    SimplexId,
    SimplicialComplex,
    build_complex,
)
from .datasets import (
    ClassificationTask,
    ImputationTask,
    classification_accuracy,
    imputation_accuracy,
    load_dataset,
    make_classification_task,
    make_imputation_task,
    synth_citation,
    synth_contact,
)
from .features import WalkFeatureMatrix, build_feature_matrix, encode_slot
from .model import (
    ForwardResult,
    ModelConfig,
    ScrawlModel,
    evaluate,
    load_checkpoint,
    run_metrics,
    save_checkpoint,
    train_epoch,
)
from .walks import (
    ConnectionRecord,
    TransitionOracle,
    Walk,
    WalkConfig,
    WalkSampler,
    WalkSet,
    sample_walk_connection,
    sample_walk_neighbor,
    sample_walk_set,
    transition_oracle,
    validate_walk,
)

__version__ = "0.1.0"

__all__ = [
    "ClassificationTask",
    "ConnectionRecord",
    "ConnectionTable",
    "ForwardResult",
    "ImputationTask",
    "ModelConfig",
    "NeighborTable",
    "ScrawlModel",
    "SimplexId",
    "SimplicialComplex",
    "TransitionOracle",
    "Walk",
    "WalkConfig",
    "WalkFeatureMatrix",
    "WalkSampler",
    "WalkSet",
    "build_complex",
    "build_feature_matrix",
    "classification_accuracy",
    "encode_slot",
    "evaluate",
    "imputation_accuracy",
    "load_checkpoint",
    "load_dataset",
    "make_classification_task",
    "make_imputation_task",
    "run_metrics",
    "sample_walk_connection",
    "save_checkpoint",
    "sample_walk_neighbor",
    "sample_walk_set",
    "synth_citation",
    "synth_contact",
    "train_epoch",
    "transition_oracle",
    "validate_walk",
    "__version__",
]
