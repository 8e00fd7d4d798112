"""Joint feature and instance selection for multi-view unlabeled data."""

from ._coselect import (
    Classifier,
    FitResult,
    Hyperparams,
    MultiViewDataset,
    SelectionResult,
    Variant,
    evaluate,
    fit,
    knn_graph,
    mvis_scores,
    normalize,
    project_to_simplex,
    select,
    synthesize,
)

__all__ = [
    "Classifier",
    "FitResult",
    "Hyperparams",
    "MultiViewDataset",
    "SelectionResult",
    "Variant",
    "evaluate",
    "fit",
    "knn_graph",
    "mvis_scores",
    "normalize",
    "project_to_simplex",
    "select",
    "synthesize",
]
