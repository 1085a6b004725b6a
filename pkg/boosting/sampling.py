"""
Weighted sampling primitives and balanced batch construction.

Index arrays returned here are positions into the arrays passed in; duplicates
are expected (sampling with replacement).
"""

import numpy as np

from utils.errors import ContractViolation, DimensionMismatchError, EmptyDatasetError, LabelRangeError


def weighted_sample(weights, bs: int, rng: np.random.Generator) -> np.ndarray:
    """bs draws with replacement, index i with probability w_i / sum(w); uniform when sum(w) == 0."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or weights.shape[0] == 0:
        raise EmptyDatasetError("weighted_sample needs a non-empty pool")
    if bs < 1:
        raise ContractViolation(f"batch size must be >= 1, got {bs}")
    if np.any(weights < 0) or not np.isfinite(weights).all():
        raise ContractViolation("sampling weights must be finite and non-negative")
    total = weights.sum()
    if total <= 0:
        return rng.integers(0, weights.shape[0], size=bs)
    return rng.choice(weights.shape[0], size=bs, replace=True, p=weights / total)


def down_sample(indices, bs: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform bs-subset of the multiset `indices`, without replacement."""
    indices = np.asarray(indices)
    if indices.shape[0] < bs:
        raise ContractViolation(f"cannot down-sample {indices.shape[0]} indices to {bs}")
    return indices[rng.choice(indices.shape[0], size=bs, replace=False)]


def balanced_sample(
    labels,
    weights,
    positive_class: int,
    bs: int,
    rng: np.random.Generator,
    require_positive: bool = True,
) -> np.ndarray:
    """
    Balanced batch for the binary problem `positive_class` vs rest.

    Draws bs positives by weighted sampling inside the positive class, bs
    candidates from each other class present, then down-samples the pooled
    negatives to bs. Pools are weighted by the positive class's weight column.

    Args:
        labels: N×J one-hot labels
        weights: N×J per-class sample weights
        positive_class: the class whose binary problem the batch serves
        bs: batch size (positives and negatives each)
        require_positive: raise when the positive class is absent; otherwise
            the batch holds negatives only

    Returns:
        Index array of length 2·bs (positives first)
    """
    labels = np.asarray(labels)
    weights = np.asarray(weights, dtype=np.float64)
    if labels.shape != weights.shape:
        raise DimensionMismatchError(f"labels {labels.shape} and weights {weights.shape} differ")
    column = weights[:, positive_class]
    members = labels[:, positive_class] == 1

    pos_pool = np.flatnonzero(members)
    if pos_pool.size:
        positives = pos_pool[weighted_sample(column[pos_pool], bs, rng)]
    elif require_positive:
        raise LabelRangeError(f"class {positive_class} has no samples to draw positives from")
    else:
        positives = np.empty(0, dtype=np.int64)

    candidates = []
    for c in range(labels.shape[1]):
        if c == positive_class:
            continue
        pool = np.flatnonzero(labels[:, c] == 1)
        if pool.size == 0:
            continue
        candidates.append(pool[weighted_sample(column[pool], bs, rng)])

    if not candidates:
        return positives.astype(np.int64)
    negatives = down_sample(np.concatenate(candidates), bs, rng)
    return np.concatenate([positives, negatives]).astype(np.int64)
