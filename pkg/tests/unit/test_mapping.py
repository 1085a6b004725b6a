import numpy as np
import pytest

from boosting.mapping import SIGMA_FLOOR, apply_map, build_identity_map, build_map
from utils.errors import ConfigError, DimensionMismatchError, EmptyDatasetError


def test_build_map_shapes_and_standardization(rng):
    source = rng.normal(size=(200, 5))
    fmap = build_map(source, 30, "tanh", rng)
    assert fmap.projection.shape == (5, 30)
    assert fmap.input_dims == 5 and fmap.node_size == 30
    pre = fmap.pre_activation(source)
    np.testing.assert_allclose(pre.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(pre.std(axis=0), 1.0, atol=1e-10)
    out = apply_map(fmap, source)
    assert out.shape == (200, 30)
    assert np.all(np.abs(out) < 1.0)


def test_build_map_is_deterministic_per_seed():
    source = np.random.default_rng(0).normal(size=(50, 4))
    a = build_map(source, 10, "relu", np.random.default_rng(9))
    b = build_map(source, 10, "relu", np.random.default_rng(9))
    np.testing.assert_array_equal(a.projection, b.projection)
    assert a.seed_tag == b.seed_tag


def test_constant_column_hits_sigma_floor():
    source = np.zeros((10, 3))
    fmap = build_map(source, 4, "sigmoid", np.random.default_rng(1))
    np.testing.assert_array_equal(fmap.sigma, np.full(4, SIGMA_FLOOR))
    out = apply_map(fmap, source)
    np.testing.assert_allclose(out, 0.5)


def test_identity_map_zscores_raw_features(rng):
    source = rng.normal(loc=3.0, scale=2.0, size=(100, 4))
    fmap = build_identity_map(source, rng)
    assert fmap.activation == "identity"
    out = apply_map(fmap, source)
    np.testing.assert_allclose(out, (source - source.mean(axis=0)) / source.std(axis=0), atol=1e-12)


def test_map_errors(rng):
    with pytest.raises(EmptyDatasetError):
        build_map(np.zeros((0, 3)), 5, "tanh", rng)
    with pytest.raises(ConfigError):
        build_map(np.zeros((4, 3)), 0, "tanh", rng)
    with pytest.raises(ConfigError):
        build_map(np.ones((4, 3)), 5, "softsign", rng)
    fmap = build_map(rng.normal(size=(8, 3)), 5, "tanh", rng)
    with pytest.raises(DimensionMismatchError):
        apply_map(fmap, np.zeros((2, 4)))
