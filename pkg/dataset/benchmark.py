"""
Synthetic domain-shift benchmark.

Classes are unit-variance Gaussian clusters whose means sit on orthogonal axes
scaled by `separation`. The target domain rotates every sample in the plane of
two randomly chosen class axes by `shift * pi/4` and then translates it by
`shift` along a random unit direction, so `shift` is measured in cluster
standard deviations. shift=0 gives identical source and target distributions.
"""

import math
from typing import Tuple

import numpy as np

from utils.errors import ConfigError
from .bundle import DomainBundle, LabeledSet, ShiftBenchmark, one_hot

DEFAULT_SEPARATION = 2.0


def _balanced_counts(total: int, num_classes: int) -> np.ndarray:
    counts = np.full(num_classes, total // num_classes, dtype=np.int64)
    counts[: total % num_classes] += 1
    return counts


def _class_means(rng: np.random.Generator, num_classes: int, dims: int, separation: float) -> np.ndarray:
    # Orthonormal class axes; J > d falls back to random unit directions
    if num_classes <= dims:
        q, _ = np.linalg.qr(rng.standard_normal((dims, num_classes)))
        axes = q.T
    else:
        axes = rng.standard_normal((num_classes, dims))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    return separation * axes


def _sample_clusters(rng: np.random.Generator, means: np.ndarray, counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    labels = np.repeat(np.arange(means.shape[0]), counts)
    features = means[labels] + rng.standard_normal((labels.shape[0], means.shape[1]))
    return features, labels


def _plane_rotation(means: np.ndarray, pair: np.ndarray, angle: float) -> np.ndarray:
    dims = means.shape[1]
    u = means[pair[0]] / np.linalg.norm(means[pair[0]])
    v = means[pair[1]] - (means[pair[1]] @ u) * u
    v /= np.linalg.norm(v)
    # R = I + (cos - 1)(uu' + vv') + sin(vu' - uv')
    rotation = (
        np.eye(dims)
        + (math.cos(angle) - 1.0) * (np.outer(u, u) + np.outer(v, v))
        + math.sin(angle) * (np.outer(v, u) - np.outer(u, v))
    )
    return rotation


def make_shift_benchmark(
    num_classes: int,
    dims: int,
    n_source: int,
    n_target: int,
    shift: float,
    seed: int,
    n_shot: int = 3,
    test_fraction: float = 0.5,
    separation: float = DEFAULT_SEPARATION,
    source_label_noise: float = 0.0,
) -> ShiftBenchmark:
    """
    Generate a labeled source, an n-shot labeled target, an unlabeled target
    pool and a held-out target test set. Pure function of its arguments.
    """
    if num_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {num_classes}")
    if dims < 2:
        raise ConfigError(f"need at least 2 dimensions, got {dims}")
    if shift < 0:
        raise ConfigError(f"shift must be >= 0, got {shift}")
    if n_shot < 1:
        raise ConfigError(f"n_shot must be >= 1, got {n_shot}")
    if n_shot * num_classes > n_target:
        raise ConfigError(
            f"{n_shot}-shot labeled target needs {n_shot * num_classes} samples, only {n_target} requested"
        )
    if n_source < num_classes:
        raise ConfigError(f"n_source={n_source} cannot cover {num_classes} classes")
    if not 0.0 <= source_label_noise < 1.0:
        raise ConfigError(f"source_label_noise must be in [0, 1), got {source_label_noise}")

    rng = np.random.default_rng(seed)
    means = _class_means(rng, num_classes, dims, separation)

    source_x, source_y = _sample_clusters(rng, means, _balanced_counts(n_source, num_classes))
    if source_label_noise > 0:
        flip = rng.random(source_y.shape[0]) < source_label_noise
        offsets = rng.integers(1, num_classes, size=source_y.shape[0])
        source_y = np.where(flip, (source_y + offsets) % num_classes, source_y)

    target_x, target_y = _sample_clusters(rng, means, _balanced_counts(n_target, num_classes))
    pair = rng.choice(num_classes, size=2, replace=False)
    direction = rng.standard_normal(dims)
    direction /= np.linalg.norm(direction)
    if num_classes <= dims:
        rotation = _plane_rotation(means, pair, shift * math.pi / 4)
        target_x = target_x @ rotation.T
    target_x = target_x + shift * direction

    # n-shot labeled split, remainder divided into unlabeled pool and test set
    order = rng.permutation(target_y.shape[0])
    labeled_idx = np.concatenate([order[target_y[order] == c][:n_shot] for c in range(num_classes)])
    rest = np.setdiff1d(order, labeled_idx, assume_unique=True)
    rest = rest[rng.permutation(rest.shape[0])]
    n_test = int(round(test_fraction * rest.shape[0]))
    test_idx, unlabeled_idx = rest[:n_test], rest[n_test:]

    bundle = DomainBundle(
        source=LabeledSet(source_x, one_hot(source_y, num_classes)),
        target_labeled=LabeledSet(target_x[labeled_idx], one_hot(target_y[labeled_idx], num_classes)),
        target_unlabeled=target_x[unlabeled_idx],
    )
    test = LabeledSet(target_x[test_idx], one_hot(target_y[test_idx], num_classes))
    return ShiftBenchmark(
        bundle=bundle,
        test=test,
        seed=seed,
        shift=shift,
        params={
            "num_classes": num_classes, "dims": dims, "n_source": n_source, "n_target": n_target,
            "n_shot": n_shot, "separation": separation, "source_label_noise": source_label_noise,
        },
    )
