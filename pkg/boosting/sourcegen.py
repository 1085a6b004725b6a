"""
Virtual source synthesis for the source-free setting.

1. Draw Beta-mixed soft labels: weight alpha on the class, 1 - alpha on one
   random other class.
2. Invert the classifier's last linear layer on those labels with a
   ridge-regularized least-norm solve.
3. Match per-feature mean and std to the target features.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from dataset.bundle import one_hot
from utils.errors import ConfigError, DimensionMismatchError, EmptyDatasetError
from utils.telemetry import get_logger
from .ridge import LinearModel

logger = get_logger(__name__)

# Relative std below which a synthesized column counts as constant
DEGENERATE_STD = 1e-12


@dataclass(frozen=True, eq=False)
class SynthesizedSource:
    features: np.ndarray  # (J·n_per_class)×d
    labels: np.ndarray  # one-hot, class-major order


def generate_soft_labels(num_classes: int, n_per_class: int, a: float, b: float, rng: np.random.Generator) -> np.ndarray:
    """
    J×(J·n_per_class) soft-label matrix, columns grouped by class.
    Column (c, i) holds alpha_i at c and 1 - alpha_i at a random r != c.
    """
    if num_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {num_classes}")
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    if a <= 0 or b <= 0:
        raise ConfigError(f"Beta parameters must be positive, got a={a}, b={b}")

    total = num_classes * n_per_class
    classes = np.repeat(np.arange(num_classes), n_per_class)
    beta = rng.beta(a, b, size=total)
    alpha = np.maximum(beta, 1.0 - beta)
    others = rng.integers(0, num_classes - 1, size=total)
    others = others + (others >= classes)

    soft = np.zeros((num_classes, total))
    columns = np.arange(total)
    soft[others, columns] = 1.0 - alpha
    # alpha written last so the class entry wins even when alpha == 1
    soft[classes, columns] = alpha
    return soft


def reconstruct_features(theta: LinearModel, soft_labels, lam: float) -> np.ndarray:
    """
    Least-norm features z with theta·z ≈ y - bias for each soft-label column:
    z = thetaᵀ (theta thetaᵀ + lam·I)⁻¹ (y - bias).

    Returns:
        (columns)×d feature matrix
    """
    soft_labels = np.asarray(soft_labels, dtype=np.float64)
    num_classes, dims = theta.weights.shape
    if num_classes > dims:
        raise DimensionMismatchError(f"cannot invert a {num_classes}×{dims} layer with more classes than features")
    if soft_labels.shape[0] != num_classes:
        raise DimensionMismatchError(f"soft labels have {soft_labels.shape[0]} rows, layer has {num_classes} outputs")
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")

    gram = theta.weights @ theta.weights.T + lam * np.eye(num_classes)
    factor = cho_factor(gram, lower=True, check_finite=False)
    coefficients = cho_solve(factor, soft_labels - theta.bias[:, None], check_finite=False)
    return (theta.weights.T @ coefficients).T


def align_moments(synth, target) -> np.ndarray:
    """Affine per-feature map giving synth the target's column means and stds."""
    synth = np.asarray(synth, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if synth.ndim != 2 or target.ndim != 2 or synth.shape[1] != target.shape[1]:
        raise DimensionMismatchError(f"synth {synth.shape} and target {target.shape} differ in columns")
    if synth.shape[0] < 2 or target.shape[0] < 2:
        raise EmptyDatasetError("moment alignment needs at least 2 rows on each side")

    mu_s, sigma_s = synth.mean(axis=0), synth.std(axis=0)
    mu_t, sigma_t = target.mean(axis=0), target.std(axis=0)
    # rounding leaves ~1e-17 spread on a constant column
    degenerate = sigma_s <= DEGENERATE_STD * np.maximum(1.0, np.abs(mu_s))
    ratio = np.where(degenerate, 0.0, sigma_t / np.where(degenerate, 1.0, sigma_s))
    return (synth - mu_s) * ratio + mu_t


def synthesize_source(
    theta: LinearModel,
    target_features,
    n_per_class: int,
    a: float,
    b: float,
    lam: float,
    rng: np.random.Generator,
) -> SynthesizedSource:
    soft = generate_soft_labels(theta.outputs, n_per_class, a, b, rng)
    raw = reconstruct_features(theta, soft, lam)
    aligned = align_moments(raw, target_features)
    # class-major construction, so ties at alpha = 0.5 still resolve to the column's class
    labels = one_hot(np.repeat(np.arange(theta.outputs), n_per_class), theta.outputs)
    logger.info(f"source_synthesized: {aligned.shape[0]} rows over {theta.outputs} classes")
    return SynthesizedSource(features=aligned, labels=labels)
