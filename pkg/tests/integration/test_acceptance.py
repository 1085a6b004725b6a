"""Desk-scale behaviour on the synthetic shift benchmark (J=4, d=20, 3-shot)."""

import numpy as np
import pytest

from orchestrator.bench import run_bench
from settings.config_model import BenchConfig, TrainConfig

pytestmark = pytest.mark.slow


def _per_seed(rows, config):
    return [r for r in rows if r["config"] == config and r["seed"] != "aggregate"]


def test_fine_tuning_beats_source_only_model():
    rows = run_bench(BenchConfig(scenario="blocks-sweep", seeds=5), TrainConfig())
    final = _per_seed(rows, "blocks=50")
    wins = sum(r["accuracy"] > r["initial_accuracy"] for r in final)
    assert wins >= 4
    assert np.mean([r["improvement"] for r in final]) >= 0.02


def test_source_removal_helps_with_noisy_source_labels():
    rows = run_bench(BenchConfig(scenario="removal-ablation", seeds=5), TrainConfig())
    on = np.mean([r["accuracy"] for r in _per_seed(rows, "removal=on")])
    off = np.mean([r["accuracy"] for r in _per_seed(rows, "removal=off")])
    assert on >= off


def test_noise_augmentation_does_not_hurt():
    rows = run_bench(BenchConfig(scenario="xi-sweep", seeds=5), TrainConfig())
    with_noise = np.mean([r["accuracy"] for r in _per_seed(rows, "xi=1.0")])
    without = np.mean([r["accuracy"] for r in _per_seed(rows, "xi=0.0")])
    assert with_noise >= without


def test_virtual_source_pipeline_beats_frozen_classifier():
    rows = run_bench(BenchConfig(scenario="sfda-pipeline", seeds=5), TrainConfig())
    runs = _per_seed(rows, "sfda")
    assert sum(r["accuracy"] > r["initial_accuracy"] for r in runs) >= 4
