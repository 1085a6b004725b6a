import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Add project root to sys.path
sys.path.append(str(Path(__file__).parent.parent))

from boosting.ridge import fit_one_vs_rest
from dataset.benchmark import make_shift_benchmark
from dataset.features import save_features
from settings.config_model import TrainConfig


@pytest.fixture(scope="function")
def test_dir():
    """Creates a temporary directory for test data."""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_benchmark():
    """3 classes, 6 dims, mild shift: fast enough for unit tests."""
    return make_shift_benchmark(num_classes=3, dims=6, n_source=90, n_target=90, shift=0.5, seed=7, n_shot=3)


@pytest.fixture
def small_bundle(small_benchmark):
    return small_benchmark.bundle


@pytest.fixture
def source_only_model(small_bundle):
    return fit_one_vs_rest(small_bundle.source.features, small_bundle.source.labels, 0.01)


@pytest.fixture
def fast_train_cfg():
    return TrainConfig(blocks=3, batch_size=16, node_size=20)


@pytest.fixture
def bundle_files(test_dir, small_benchmark):
    """The small benchmark written as feature CSVs; returns a dict of paths."""
    bundle = small_benchmark.bundle
    root = Path(test_dir)
    paths = {
        "source": root / "source.csv",
        "target_labeled": root / "target_labeled.csv",
        "target_unlabeled": root / "target_unlabeled.csv",
        "test": root / "test.csv",
    }
    save_features(paths["source"], bundle.source.features, bundle.source.labels)
    save_features(paths["target_labeled"], bundle.target_labeled.features, bundle.target_labeled.labels)
    save_features(paths["target_unlabeled"], bundle.target_unlabeled)
    save_features(paths["test"], small_benchmark.test.features, small_benchmark.test.labels)
    return {name: str(path) for name, path in paths.items()}
