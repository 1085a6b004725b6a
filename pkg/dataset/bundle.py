"""
Data model shared by every stage of the pipeline.

Feature matrices are plain float64 numpy arrays (rows are samples). Labels are
carried as one-hot indicator matrices; helpers here build and check both.
"""

from dataclasses import dataclass, field

import numpy as np

from utils.errors import (
    DimensionMismatchError,
    EmptyDatasetError,
    LabelRangeError,
    NonFiniteValueError,
)

FeatureMatrix = np.ndarray
OneHotLabels = np.ndarray


def as_feature_matrix(values, name: str = "features") -> FeatureMatrix:
    """Validate and freeze a 2-D float matrix with finite entries and at least one column."""
    matrix = np.array(values, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {matrix.shape}")
    if matrix.shape[1] < 1:
        raise DimensionMismatchError(f"{name} must have at least one column")
    finite = np.isfinite(matrix)
    if not finite.all():
        row = int(np.argwhere(~finite)[0, 0])
        raise NonFiniteValueError(f"{name} row {row} holds a non-finite value")
    matrix.setflags(write=False)
    return matrix


def one_hot(indices, num_classes: int) -> OneHotLabels:
    """Encode 0-based class indices as an N×J indicator matrix."""
    indices = np.asarray(indices)
    if num_classes < 2:
        raise LabelRangeError(f"need at least 2 classes, got {num_classes}")
    if indices.size and (indices.min() < 0 or indices.max() >= num_classes):
        raise LabelRangeError(
            f"class index out of range [0, {num_classes}): min {indices.min()}, max {indices.max()}"
        )
    labels = np.zeros((indices.shape[0], num_classes), dtype=np.float64)
    labels[np.arange(indices.shape[0]), indices.astype(np.int64)] = 1.0
    labels.setflags(write=False)
    return labels


def class_indices(labels: OneHotLabels) -> np.ndarray:
    """Row argmax of an indicator matrix, lowest index on ties."""
    return np.argmax(labels, axis=1)


def check_one_hot(labels, name: str = "labels") -> OneHotLabels:
    labels = np.asarray(labels, dtype=np.float64)
    if labels.ndim != 2 or labels.shape[1] < 2:
        raise DimensionMismatchError(f"{name} must be N×J with J >= 2, got shape {labels.shape}")
    valid = np.isin(labels, (0.0, 1.0)).all() and np.all(labels.sum(axis=1) == 1.0)
    if not valid:
        raise LabelRangeError(f"{name} rows must hold exactly one 1 and zeros elsewhere")
    return labels


@dataclass(frozen=True, eq=False)
class LabeledSet:
    features: FeatureMatrix
    labels: OneHotLabels

    def __post_init__(self):
        object.__setattr__(self, "features", as_feature_matrix(self.features))
        object.__setattr__(self, "labels", check_one_hot(self.labels))
        if self.features.shape[0] != self.labels.shape[0]:
            raise DimensionMismatchError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} label rows"
            )

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def num_classes(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True, eq=False)
class DomainBundle:
    """Labeled source, labeled target (n-shot) and unlabeled target data."""
    source: LabeledSet
    target_labeled: LabeledSet
    target_unlabeled: FeatureMatrix

    def __post_init__(self):
        object.__setattr__(self, "target_unlabeled", as_feature_matrix(self.target_unlabeled, "target_unlabeled"))
        dims = {self.source.features.shape[1], self.target_labeled.features.shape[1], self.target_unlabeled.shape[1]}
        if len(dims) != 1:
            raise DimensionMismatchError(f"source/target feature dimensions differ: {sorted(dims)}")
        if self.source.num_classes != self.target_labeled.num_classes:
            raise DimensionMismatchError(
                f"source has {self.source.num_classes} classes, labeled target has {self.target_labeled.num_classes}"
            )
        if self.source.size == 0:
            raise EmptyDatasetError("source partition is empty")
        missing = np.flatnonzero(self.target_labeled.labels.sum(axis=0) == 0)
        if missing.size:
            raise LabelRangeError(f"labeled target has no samples of classes {missing.tolist()}")

    @property
    def dims(self) -> int:
        return self.source.features.shape[1]

    @property
    def num_classes(self) -> int:
        return self.source.num_classes


@dataclass(frozen=True, eq=False)
class ShiftBenchmark:
    """A generated bundle plus its held-out target test set."""
    bundle: DomainBundle
    test: LabeledSet
    seed: int
    shift: float
    params: dict = field(default_factory=dict)
