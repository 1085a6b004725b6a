"""
Frozen random nonlinear feature maps: h(z) = act((z M - mu) / sigma).

M is drawn once from the shared stream and never trained; mu and sigma are the
column statistics of the source features pushed through M.
"""

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np
from scipy.special import expit

from utils.errors import ConfigError, DimensionMismatchError, EmptyDatasetError

SIGMA_FLOOR = 1e-8

ACTIVATIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "tanh": np.tanh,
    "sigmoid": expit,
    "relu": lambda x: np.maximum(x, 0.0),
    # used by the no-mapping variant (identity projection)
    "identity": lambda x: x,
}


@dataclass(frozen=True, eq=False)
class RandomFeatureMap:
    projection: np.ndarray  # d×ns
    mu: np.ndarray
    sigma: np.ndarray
    activation: str
    seed_tag: int = 0

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{self.activation}', expected one of {sorted(ACTIVATIONS)}")
        for name in ("projection", "mu", "sigma"):
            array = np.array(getattr(self, name), dtype=np.float64)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        if self.projection.ndim != 2 or self.mu.shape != (self.node_size,) or self.sigma.shape != (self.node_size,):
            raise DimensionMismatchError("projection, mu and sigma disagree on the node size")

    @property
    def input_dims(self) -> int:
        return self.projection.shape[0]

    @property
    def node_size(self) -> int:
        return self.projection.shape[1]

    def pre_activation(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.input_dims:
            raise DimensionMismatchError(
                f"map expects {self.input_dims} input columns, got shape {features.shape}"
            )
        return (features @ self.projection - self.mu) / self.sigma


def _fit_statistics(source_features: np.ndarray, projection: np.ndarray):
    projected = source_features @ projection
    mu = projected.mean(axis=0)
    sigma = np.maximum(projected.std(axis=0), SIGMA_FLOOR)
    return mu, sigma


def _tag(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


def build_map(source_features, ns: int, activation: str, rng: np.random.Generator) -> RandomFeatureMap:
    """Draw a d×ns standard-normal projection and standardize it against the source features."""
    source_features = np.asarray(source_features, dtype=np.float64)
    if source_features.ndim != 2 or source_features.shape[0] == 0:
        raise EmptyDatasetError("cannot build a feature map from an empty source")
    if ns < 1:
        raise ConfigError(f"node size must be >= 1, got {ns}")
    seed_tag = _tag(rng)
    projection = rng.standard_normal((source_features.shape[1], ns))
    mu, sigma = _fit_statistics(source_features, projection)
    return RandomFeatureMap(projection=projection, mu=mu, sigma=sigma, activation=activation, seed_tag=seed_tag)


def build_identity_map(source_features, rng: np.random.Generator) -> RandomFeatureMap:
    """z-scored raw features with no projection or nonlinearity."""
    source_features = np.asarray(source_features, dtype=np.float64)
    if source_features.ndim != 2 or source_features.shape[0] == 0:
        raise EmptyDatasetError("cannot build a feature map from an empty source")
    projection = np.eye(source_features.shape[1])
    mu, sigma = _fit_statistics(source_features, projection)
    return RandomFeatureMap(projection=projection, mu=mu, sigma=sigma, activation="identity", seed_tag=_tag(rng))


def apply_map(feature_map: RandomFeatureMap, features) -> np.ndarray:
    return ACTIVATIONS[feature_map.activation](feature_map.pre_activation(features))
