"""
Benchmark scenarios on synthetic shift bundles.

Every scenario runs a grid of configurations over consecutive seeds and
reports, per (configuration, seed), the accuracy of the source-only initial
model and of the fine-tuned model on the held-out target test set, followed
by one aggregate row per configuration.
"""

from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from boosting.ridge import LinearModel, fit_one_vs_rest, predict_linear
from boosting.sourcegen import synthesize_source
from boosting.trainer import accuracy, train
from dataset.benchmark import make_shift_benchmark
from dataset.bundle import DomainBundle, LabeledSet
from settings.config_model import SCENARIOS, BenchConfig, SynthConfig, TrainConfig
from storage.reports import write_metrics
from utils.errors import ConfigError
from utils.telemetry import get_logger

logger = get_logger(__name__)

SHIFT_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
XI_GRID = (0.0, 0.25, 0.5, 1.0, 2.0)
BLOCKS_GRID = (0, 5, 10, 25, 50)
NODE_SIZE_GRID = (50, 100, 200, 500)
SFDA_DIMS = 32
SFDA_LAMBDA = 1e-6

# (configuration label, initial accuracy, fine-tuned accuracy)
Outcome = Tuple[str, float, float]


def _benchmark(cfg: BenchConfig, seed: int, shift: Optional[float] = None, dims: Optional[int] = None,
               label_noise: float = 0.0):
    return make_shift_benchmark(
        num_classes=cfg.num_classes,
        dims=dims or cfg.dims,
        n_source=cfg.n_source,
        n_target=cfg.n_target,
        shift=cfg.shift if shift is None else shift,
        seed=seed,
        n_shot=cfg.n_shot,
        source_label_noise=label_noise,
    )


def _source_only(bundle: DomainBundle, lam: float) -> LinearModel:
    return fit_one_vs_rest(bundle.source.features, bundle.source.labels, lam)


def _test_accuracy(model: LinearModel, test: LabeledSet) -> float:
    return accuracy(predict_linear(model, test.features), test.labels)


def _fine_tune(bundle: DomainBundle, initial: LinearModel, test: LabeledSet, train_cfg: TrainConfig) -> float:
    result = train(bundle, initial, train_cfg, test=test)
    if not result.log:
        return _test_accuracy(initial, test)
    return result.log[-1].test_accuracy


# =============================================================================
# SCENARIOS
# =============================================================================

def _shift_sweep(cfg: BenchConfig, train_cfg: TrainConfig, seed: int) -> List[Outcome]:
    outcomes = []
    for shift in SHIFT_GRID:
        bench = _benchmark(cfg, seed, shift=shift)
        initial = _source_only(bench.bundle, cfg.init_lambda)
        outcomes.append((
            f"shift={shift}",
            _test_accuracy(initial, bench.test),
            _fine_tune(bench.bundle, initial, bench.test, train_cfg),
        ))
    return outcomes


def _xi_sweep(cfg: BenchConfig, train_cfg: TrainConfig, seed: int) -> List[Outcome]:
    bench = _benchmark(cfg, seed)
    initial = _source_only(bench.bundle, cfg.init_lambda)
    base = _test_accuracy(initial, bench.test)
    return [
        (f"xi={xi}", base, _fine_tune(bench.bundle, initial, bench.test, train_cfg.model_copy(update={"xi": xi})))
        for xi in XI_GRID
    ]


def blocks_grid(max_blocks: int) -> List[int]:
    """BLOCKS_GRID cut at max_blocks, with max_blocks itself as the last point."""
    return sorted({k for k in BLOCKS_GRID if k < max_blocks} | {max_blocks})


def _blocks_sweep(cfg: BenchConfig, train_cfg: TrainConfig, seed: int) -> List[Outcome]:
    # Block k only depends on blocks before it, so one run of max(K) pairs covers the whole grid
    bench = _benchmark(cfg, seed)
    initial = _source_only(bench.bundle, cfg.init_lambda)
    base = _test_accuracy(initial, bench.test)
    grid = blocks_grid(train_cfg.blocks)
    result = train(bench.bundle, initial, train_cfg.model_copy(update={"blocks": grid[-1]}), test=bench.test)
    by_index = {entry.block_index: entry.test_accuracy for entry in result.log}
    return [(f"blocks={k}", base, base if k == 0 else by_index[2 * k]) for k in grid]


def _removal_ablation(cfg: BenchConfig, train_cfg: TrainConfig, seed: int) -> List[Outcome]:
    bench = _benchmark(cfg, seed, label_noise=cfg.label_noise)
    initial = _source_only(bench.bundle, cfg.init_lambda)
    base = _test_accuracy(initial, bench.test)
    return [
        (
            f"removal={'on' if remove else 'off'}",
            base,
            _fine_tune(bench.bundle, initial, bench.test,
                       train_cfg.model_copy(update={"remove_misclassified_source": remove})),
        )
        for remove in (True, False)
    ]


def _mapping_sweep(cfg: BenchConfig, train_cfg: TrainConfig, seed: int) -> List[Outcome]:
    bench = _benchmark(cfg, seed)
    initial = _source_only(bench.bundle, cfg.init_lambda)
    base = _test_accuracy(initial, bench.test)
    outcomes = [
        (f"node_size={ns}", base,
         _fine_tune(bench.bundle, initial, bench.test, train_cfg.model_copy(update={"node_size": ns})))
        for ns in NODE_SIZE_GRID
    ]
    outcomes.append((
        "mapping=none", base,
        _fine_tune(bench.bundle, initial, bench.test, train_cfg.model_copy(update={"use_mapping": False})),
    ))
    return outcomes


def _sfda_pipeline(cfg: BenchConfig, train_cfg: TrainConfig, seed: int) -> List[Outcome]:
    """Freeze a source classifier, discard the source, synthesize a virtual one and fine-tune on it."""
    bench = _benchmark(cfg, seed, dims=max(cfg.dims, SFDA_DIMS))
    theta = _source_only(bench.bundle, SFDA_LAMBDA)
    base = _test_accuracy(theta, bench.test)

    synth_cfg = SynthConfig(seed=seed)
    target = np.vstack([bench.bundle.target_labeled.features, bench.bundle.target_unlabeled])
    synth = synthesize_source(
        theta, target, synth_cfg.per_class, synth_cfg.beta_a, synth_cfg.beta_b, synth_cfg.ridge_lambda,
        np.random.default_rng(seed),
    )
    virtual = DomainBundle(
        source=LabeledSet(synth.features, synth.labels),
        target_labeled=bench.bundle.target_labeled,
        target_unlabeled=bench.bundle.target_unlabeled,
    )
    return [("sfda", base, _fine_tune(virtual, theta, bench.test, train_cfg))]


SCENARIO_RUNNERS: Dict[str, Callable[[BenchConfig, TrainConfig, int], List[Outcome]]] = {
    "shift-sweep": _shift_sweep,
    "xi-sweep": _xi_sweep,
    "blocks-sweep": _blocks_sweep,
    "removal-ablation": _removal_ablation,
    "sfda-pipeline": _sfda_pipeline,
    "mapping-sweep": _mapping_sweep,
}


# =============================================================================
# DRIVER
# =============================================================================

def check_scenario(name: str) -> str:
    if name not in SCENARIO_RUNNERS:
        raise ConfigError(f"unknown scenario '{name}'; valid scenarios: {', '.join(SCENARIOS)}")
    return name


def seed_list(cfg: BenchConfig) -> List[int]:
    return [cfg.base_seed + i for i in range(cfg.seeds)]


def aggregate(rows: Iterable[dict]) -> List[dict]:
    """Mean and population std of accuracy per configuration, in first-seen order."""
    groups: Dict[Tuple[str, str], List[dict]] = {}
    for row in rows:
        groups.setdefault((row["scenario"], row["config"]), []).append(row)
    summary = []
    for (scenario, config), members in groups.items():
        acc = np.array([m["accuracy"] for m in members])
        init = np.array([m["initial_accuracy"] for m in members])
        summary.append({
            "scenario": scenario,
            "config": config,
            "seed": "aggregate",
            "initial_accuracy": float(init.mean()),
            "accuracy": float(acc.mean()),
            "accuracy_std": float(acc.std()),
            "improvement": float((acc - init).mean()),
        })
    return summary


def run_bench(cfg: BenchConfig, train_cfg: Optional[TrainConfig] = None) -> List[dict]:
    """Per-seed rows for every configuration, followed by the aggregate rows."""
    check_scenario(cfg.scenario)
    runner = SCENARIO_RUNNERS[cfg.scenario]
    train_cfg = (train_cfg or TrainConfig()).model_copy(update={"blocks": cfg.blocks})

    rows = []
    for seed in seed_list(cfg):
        for config, initial_acc, acc in runner(cfg, train_cfg.model_copy(update={"seed": seed}), seed):
            rows.append({
                "scenario": cfg.scenario,
                "config": config,
                "seed": seed,
                "initial_accuracy": initial_acc,
                "accuracy": acc,
                "accuracy_std": None,
                "improvement": acc - initial_acc,
            })
        logger.info(f"bench_seed_done: {cfg.scenario} seed={seed}")
    return rows + aggregate(rows)


def run_bench_to_file(cfg: BenchConfig, out_path, train_cfg: Optional[TrainConfig] = None) -> List[dict]:
    rows = run_bench(cfg, train_cfg)
    write_metrics(out_path, rows)
    return rows
