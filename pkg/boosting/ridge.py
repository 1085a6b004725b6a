"""
Closed-form ridge regression base learners and linear-model scoring.

The intercept is left unpenalized: features and targets are centered (with
sample weights when given), the penalized normal equations are solved by a
Cholesky factorization, and the intercept is recovered from the means.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from utils.errors import ConfigError, DimensionMismatchError, EmptyDatasetError, NonFiniteValueError
from utils.telemetry import get_logger

logger = get_logger(__name__)

JITTER_FLOOR = 1e-10
_MAX_JITTER_STEPS = 8


@dataclass(frozen=True, eq=False)
class LinearModel:
    """scores = X · weightsᵀ + bias; weights is k×m, bias has length k."""
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        if weights.ndim != 2 or bias.shape[0] != weights.shape[0]:
            raise DimensionMismatchError(f"weights {weights.shape} and bias {bias.shape} disagree")
        if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
            raise NonFiniteValueError("linear model parameters must be finite")
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def outputs(self) -> int:
        return self.weights.shape[0]

    @property
    def input_dims(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class RidgeSolveInfo:
    jitter: float = 0.0
    rows: int = 0


def predict_linear(model: LinearModel, features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.input_dims:
        raise DimensionMismatchError(f"model expects {model.input_dims} input columns, got shape {features.shape}")
    return features @ model.weights.T + model.bias


def stack_models(models: Sequence[LinearModel]) -> LinearModel:
    """Stack single-output learners into one multi-output model."""
    return LinearModel(
        weights=np.vstack([m.weights for m in models]),
        bias=np.concatenate([m.bias for m in models]),
    )


def _factor_solve(gram: np.ndarray, rhs: np.ndarray) -> Tuple[np.ndarray, float]:
    jitter = 0.0
    for step in range(_MAX_JITTER_STEPS + 1):
        try:
            factor = cho_factor(gram + jitter * np.eye(gram.shape[0]), lower=True, check_finite=False)
            return cho_solve(factor, rhs, check_finite=False), jitter
        except LinAlgError:
            jitter = JITTER_FLOOR * (10.0 ** step)
    raise LinAlgError("normal equations stayed singular after jitter")


def solve_ridge(X, y, lam: float, sample_weight=None) -> Tuple[LinearModel, RidgeSolveInfo]:
    """
    Minimize sum_i s_i (x_i·beta + b - y_i)^2 + lam·|beta|^2 with b unpenalized.

    Returns:
        (1-output LinearModel, solve diagnostics)
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X {X.shape} and y {y.shape} disagree")
    if X.shape[0] == 0:
        raise EmptyDatasetError("ridge regression needs at least one row")
    if lam < 0:
        raise ConfigError(f"ridge lambda must be >= 0, got {lam}")

    if sample_weight is None:
        s = np.ones(X.shape[0])
    else:
        s = np.asarray(sample_weight, dtype=np.float64).reshape(-1)
        if s.shape[0] != X.shape[0]:
            raise DimensionMismatchError("sample_weight length differs from row count")
    total = s.sum()
    if total <= 0:
        raise EmptyDatasetError("all sample weights are zero")

    x_mean = s @ X / total
    y_mean = s @ y / total
    xc = X - x_mean
    yc = y - y_mean
    weighted = xc * s[:, None]
    gram = weighted.T @ xc + lam * np.eye(X.shape[1])
    rhs = weighted.T @ yc

    beta, jitter = _factor_solve(gram, rhs)
    bias = y_mean - x_mean @ beta
    return LinearModel(weights=beta[None, :], bias=np.array([bias])), RidgeSolveInfo(jitter=jitter, rows=X.shape[0])


def fit_ridge(X, y, lam: float, sample_weight=None) -> LinearModel:
    model, info = solve_ridge(X, y, lam, sample_weight)
    if info.jitter > 0:
        logger.warning(f"ridge_jitter_applied: jitter={info.jitter:g} rows={info.rows} lambda={lam:g}")
    return model


def _run(tasks, threads: int) -> List[LinearModel]:
    if threads <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda task: task(), tasks))


def fit_block_learners(
    mapped,
    responses,
    batches: Sequence[np.ndarray],
    lam: float,
    threads: int = 1,
) -> List[LinearModel]:
    """
    One ridge learner per class j, fit on the rows of `mapped` selected by
    batches[j] (repeats kept as repeated rows) against column j of `responses`.
    """
    mapped = np.asarray(mapped, dtype=np.float64)
    responses = np.asarray(responses, dtype=np.float64)
    if responses.shape[0] != mapped.shape[0] or responses.shape[1] != len(batches):
        raise DimensionMismatchError(
            f"responses {responses.shape} do not match {mapped.shape[0]} rows and {len(batches)} batches"
        )
    for j, batch in enumerate(batches):
        if len(batch) == 0:
            raise EmptyDatasetError(f"batch for class {j} is empty")

    tasks = [
        (lambda j=j, batch=np.asarray(batches[j]): fit_ridge(mapped[batch], responses[batch, j], lam))
        for j in range(len(batches))
    ]
    return _run(tasks, threads)


def fit_block_learners_weighted(
    mapped,
    responses,
    weights,
    lam: float,
    threads: int = 1,
) -> List[LinearModel]:
    """Full-batch variant: learner j is a weighted ridge fit on every row with weights[:, j]."""
    mapped = np.asarray(mapped, dtype=np.float64)
    responses = np.asarray(responses, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if responses.shape != weights.shape or responses.shape[0] != mapped.shape[0]:
        raise DimensionMismatchError("mapped rows, responses and weights disagree")

    tasks = [
        (lambda j=j: fit_ridge(mapped, responses[:, j], lam, sample_weight=weights[:, j]))
        for j in range(responses.shape[1])
    ]
    return _run(tasks, threads)


def fit_one_vs_rest(X, Y, lam: float, sample_weight: Optional[np.ndarray] = None) -> LinearModel:
    """J×d linear classifier: one ridge fit per class on ±1-coded indicator targets."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"labels {Y.shape} do not match features {X.shape}")
    return stack_models([fit_ridge(X, 2.0 * Y[:, c] - 1.0, lam, sample_weight) for c in range(Y.shape[1])])
