# Dataset: feature ingest, the semi-supervised domain adaptation data model,
# and the synthetic shift benchmark.

from dataset.bundle import (
    DomainBundle,
    FeatureMatrix,
    LabeledSet,
    OneHotLabels,
    ShiftBenchmark,
    as_feature_matrix,
    check_one_hot,
    class_indices,
    one_hot,
)
from dataset.features import load_features, save_features
from dataset.benchmark import make_shift_benchmark

__all__ = [
    "DomainBundle",
    "FeatureMatrix",
    "LabeledSet",
    "OneHotLabels",
    "ShiftBenchmark",
    "as_feature_matrix",
    "check_one_hot",
    "class_indices",
    "one_hot",
    "load_features",
    "save_features",
    "make_shift_benchmark",
]
