"""
LogitBoost arithmetic for J-class problems.

All functions work row-wise on the last axis, so they accept a single
J-vector or an N×J matrix. Labels are 0/1 indicators; the working response
is (y - p) / w, i.e. minus the gradient over the curvature of cross-entropy.
"""

import numpy as np
from scipy.special import logsumexp

from utils.errors import ContractViolation, DimensionMismatchError, NonFiniteValueError

PROB_FLOOR = 0.0001
PROB_CEIL = 0.9999
RESPONSE_BOUND = 4.0
NORM_EPS = 1e-12


def _finite(values, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise NonFiniteValueError(f"{name} must be finite")
    return values


def softmax_prob(logits) -> np.ndarray:
    """Numerically stable softmax (max-subtraction) along the last axis."""
    logits = _finite(logits, "logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def clip_prob(p):
    return np.clip(p, PROB_FLOOR, PROB_CEIL)


def sample_weight(p):
    """Per-class LogitBoost weight p(1 - p)."""
    p = np.asarray(p, dtype=np.float64)
    return p * (1.0 - p)


def pseudo_label(y_indicator, p, w):
    """Clamped working response (y - p) / w; zero weights are the caller's to skip."""
    w = np.asarray(w, dtype=np.float64)
    if np.any(w <= 0):
        raise ContractViolation("pseudo_label needs strictly positive weights; skip zero-weight samples")
    raw = (np.asarray(y_indicator, dtype=np.float64) - np.asarray(p, dtype=np.float64)) / w
    return np.clip(raw, -RESPONSE_BOUND, RESPONSE_BOUND)


def logit_derivatives(logits, y):
    """
    First and second derivatives of softmax cross-entropy w.r.t. the logits.

    Returns:
        (g, q) with g = p - y and q = p(1 - p) (the diagonal of the Hessian)
    """
    logits = np.asarray(logits, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if logits.shape != y.shape:
        raise DimensionMismatchError(f"logits shape {logits.shape} != labels shape {y.shape}")
    p = softmax_prob(logits)
    return p - y, p * (1.0 - p)


def cross_entropy(logits, y) -> np.ndarray:
    """Per-row cross-entropy -sum_j y_j log softmax_j(F)."""
    logits = _finite(logits, "logits")
    y = np.asarray(y, dtype=np.float64)
    if logits.shape != y.shape:
        raise DimensionMismatchError(f"logits shape {logits.shape} != labels shape {y.shape}")
    log_p = logits - logsumexp(logits, axis=-1, keepdims=True)
    return -(y * log_p).sum(axis=-1)


def working_response(logits, y):
    """
    Clipped probabilities, weights and pseudo-labels for every class of every row.

    Returns:
        (p, w, y_tilde), each shaped like `logits`
    """
    logits = np.asarray(logits, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if logits.shape != y.shape:
        raise DimensionMismatchError(f"logits shape {logits.shape} != labels shape {y.shape}")
    p = clip_prob(softmax_prob(logits))
    w = sample_weight(p)
    return p, w, pseudo_label(y, p, w)


def _unit_rows(values: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(values, axis=-1, keepdims=True)
    degenerate = norms < NORM_EPS
    safe = np.where(degenerate, 1.0, norms)
    return np.where(degenerate, 0.0, values / safe)


def normalize_initial(raw_scores) -> np.ndarray:
    """Center each score vector and scale it to unit L2 norm; constant vectors map to zeros."""
    raw_scores = _finite(raw_scores, "raw_scores")
    if raw_scores.shape[-1] < 2:
        raise DimensionMismatchError("normalize_initial needs J >= 2")
    centered = raw_scores - raw_scores.mean(axis=-1, keepdims=True)
    return _unit_rows(centered)


def norm_learner(raw) -> np.ndarray:
    """Learner output transform: scaled centering, clamp to [-4, 4], unit L2 norm."""
    raw = _finite(raw, "raw")
    num_classes = raw.shape[-1]
    if num_classes < 2:
        raise DimensionMismatchError("norm_learner needs J >= 2")
    scaled = (num_classes - 1) / num_classes * (raw - raw.mean(axis=-1, keepdims=True))
    clamped = np.clip(scaled, -RESPONSE_BOUND, RESPONSE_BOUND)
    return _unit_rows(clamped)


def predict_labels(scores) -> np.ndarray:
    """Row argmax, lowest class index on ties."""
    return np.argmax(np.asarray(scores), axis=-1)
