import logging

import numpy as np
import pytest

from boosting.logitboost import cross_entropy, predict_labels
from boosting.ridge import LinearModel, fit_one_vs_rest, predict_linear
import boosting.trainer as trainer
from boosting.trainer import (
    DA,
    SOURCE,
    SSL,
    TARGET_LABELED,
    TARGET_UNLABELED,
    EnsembleModel,
    da_step,
    ensemble_scores,
    init_state,
    predict,
    ssl_step,
    train,
)
from dataset.benchmark import make_shift_benchmark
from dataset.bundle import DomainBundle, LabeledSet, class_indices, one_hot
from settings.config_model import TrainConfig
from utils.errors import DimensionMismatchError, EmptyDatasetError


def _same_model(a: EnsembleModel, b: EnsembleModel):
    assert len(a.blocks) == len(b.blocks)
    for x, y in zip(a.blocks, b.blocks):
        assert x.kind == y.kind
        np.testing.assert_array_equal(x.feature_map.projection, y.feature_map.projection)
        for la, lb in zip(x.learners, y.learners):
            np.testing.assert_array_equal(la.weights, lb.weights)
            np.testing.assert_array_equal(la.bias, lb.bias)


def test_zero_blocks_keeps_initial_predictions(small_bundle, source_only_model, small_benchmark):
    result = train(small_bundle, source_only_model, TrainConfig(blocks=0))
    assert result.model.blocks == ()
    assert result.log == []
    x = small_benchmark.test.features
    _, labels = predict(result.model, x)
    np.testing.assert_array_equal(labels, predict_labels(predict_linear(source_only_model, x)))


def test_block_log_alternates_da_and_ssl(small_benchmark, source_only_model, fast_train_cfg):
    result = train(small_benchmark.bundle, source_only_model, fast_train_cfg, test=small_benchmark.test)
    assert [e.block_index for e in result.log] == list(range(1, 7))
    assert [e.kind for e in result.log] == [DA, SSL] * 3
    assert [b.kind for b in result.model.blocks] == [DA, SSL] * 3
    assert all(0.0 <= e.test_accuracy <= 1.0 for e in result.log)
    assert all(e.labeled_cross_entropy > 0 for e in result.log)


def test_training_is_deterministic(small_bundle, source_only_model, fast_train_cfg):
    a = train(small_bundle, source_only_model, fast_train_cfg)
    b = train(small_bundle, source_only_model, fast_train_cfg)
    _same_model(a.model, b.model)
    c = train(small_bundle, source_only_model, fast_train_cfg.model_copy(update={"seed": 99}))
    assert not np.array_equal(c.model.blocks[0].feature_map.projection, a.model.blocks[0].feature_map.projection)


def test_thread_count_does_not_change_the_model(small_bundle, source_only_model, fast_train_cfg):
    a = train(small_bundle, source_only_model, fast_train_cfg)
    b = train(small_bundle, source_only_model, fast_train_cfg.model_copy(update={"threads": 3}))
    _same_model(a.model, b.model)


def test_cached_logits_match_full_evaluation(small_benchmark, source_only_model):
    cfg = TrainConfig(blocks=10, batch_size=16, node_size=20)
    result = train(small_benchmark.bundle, source_only_model, cfg, test=small_benchmark.test)
    assert len(result.model.blocks) == 20
    for name, features in result.state.features.items():
        np.testing.assert_allclose(
            result.state.logits[name], ensemble_scores(result.model, features), rtol=0, atol=1e-9,
        )


def test_deterministic_mode_lowers_labeled_loss():
    bench = make_shift_benchmark(num_classes=4, dims=20, n_source=180, n_target=100, shift=0.5, seed=3, n_shot=5)
    bundle = bench.bundle
    assert bundle.source.size + bundle.target_labeled.size == 200
    initial = fit_one_vs_rest(bundle.source.features, bundle.source.labels, 0.01)
    cfg = TrainConfig(blocks=10, deterministic=True, lr=0.1, ridge_lambda=0.01)

    start = EnsembleModel(initial=initial, blocks=(), lr=cfg.lr)
    before = cross_entropy(ensemble_scores(start, bundle.target_labeled.features), bundle.target_labeled.labels).mean()
    result = train(bundle, initial, cfg)
    assert result.log[-1].labeled_cross_entropy < before

    # deterministic mode is a pure function of the seed as well
    again = train(bundle, initial, cfg)
    _same_model(result.model, again.model)


def test_noise_free_shortcut_matches_cached_logits(small_bundle, source_only_model):
    cfg = TrainConfig(blocks=1, xi=0.0, batch_size=16, node_size=20)
    model = EnsembleModel(initial=source_only_model, blocks=(), lr=cfg.lr)
    state = init_state(model, small_bundle)
    block = da_step(state, small_bundle, cfg, np.random.default_rng(0))
    state.commit(block, cfg.lr)
    recomputed = state.pre_da_unlabeled + block.contribution(small_bundle.target_unlabeled, cfg.lr)
    np.testing.assert_allclose(recomputed, state.logits[TARGET_UNLABELED], rtol=0, atol=1e-12)


def _all_source_wrong_bundle():
    rng = np.random.default_rng(4)
    source = LabeledSet(rng.normal(size=(20, 4)), one_hot(np.ones(20, dtype=int), 3))
    target = LabeledSet(rng.normal(size=(6, 4)), one_hot([0, 1, 2, 0, 1, 2], 3))
    return DomainBundle(source=source, target_labeled=target, target_unlabeled=rng.normal(size=(10, 4)))


def test_fully_misclassified_source_trains_on_target_only(caplog):
    bundle = _all_source_wrong_bundle()
    # always predicts class 0
    initial = LinearModel(weights=np.zeros((3, 4)), bias=np.array([1.0, 0.0, 0.0]))
    with caplog.at_level(logging.WARNING):
        result = train(bundle, initial, TrainConfig(blocks=1, batch_size=8, node_size=10))
    assert len(result.model.blocks) == 2
    assert any("source_pool_empty" in r.getMessage() for r in caplog.records)


def test_source_removal_changes_the_da_block(small_bundle):
    # a deliberately weak initial model so some source rows are misclassified
    initial = fit_one_vs_rest(small_bundle.source.features[:, :1], small_bundle.source.labels, 0.01)
    initial = LinearModel(
        weights=np.hstack([initial.weights, np.zeros((initial.outputs, small_bundle.dims - 1))]),
        bias=initial.bias,
    )
    base = TrainConfig(blocks=1, deterministic=True, node_size=20)
    with_removal = train(small_bundle, initial, base)
    without = train(small_bundle, initial, base.model_copy(update={"remove_misclassified_source": False}))
    a, b = with_removal.model.blocks[0].learners[0], without.model.blocks[0].learners[0]
    assert not np.allclose(a.weights, b.weights)


def test_identity_mapping_variant(small_bundle, source_only_model):
    result = train(small_bundle, source_only_model, TrainConfig(blocks=2, batch_size=16, use_mapping=False))
    assert all(b.feature_map.activation == "identity" for b in result.model.blocks)
    assert all(b.feature_map.node_size == small_bundle.dims for b in result.model.blocks)


def test_training_errors(small_bundle, source_only_model):
    wrong = LinearModel(weights=np.zeros((3, small_bundle.dims + 1)), bias=np.zeros(3))
    with pytest.raises(DimensionMismatchError):
        train(small_bundle, wrong, TrainConfig(blocks=1))

    empty = DomainBundle(
        source=small_bundle.source,
        target_labeled=small_bundle.target_labeled,
        target_unlabeled=np.zeros((0, small_bundle.dims)),
    )
    with pytest.raises(EmptyDatasetError):
        train(empty, source_only_model, TrainConfig(blocks=1))
    assert train(empty, source_only_model, TrainConfig(blocks=0)).model.blocks == ()


# =============================================================================
# Block steps
# =============================================================================

@pytest.fixture
def fit_calls(monkeypatch):
    """Records what each block step hands to the ridge fits."""
    calls = []
    real_fit = trainer._fit

    def recording_fit(mapped, y_tilde, w, batches, cfg):
        calls.append({"y_tilde": y_tilde.copy(), "w": w.copy(), "batches": batches})
        return real_fit(mapped, y_tilde, w, batches, cfg)

    monkeypatch.setattr(trainer, "_fit", recording_fit)
    return calls


@pytest.fixture
def mapped_inputs(monkeypatch):
    """Records every feature matrix pushed through a block's feature map."""
    inputs = []
    real_apply = trainer.apply_map

    def recording_apply(feature_map, features):
        inputs.append(np.array(features, copy=True))
        return real_apply(feature_map, features)

    monkeypatch.setattr(trainer, "apply_map", recording_apply)
    return inputs


def _fresh_state(bundle, initial, cfg):
    return init_state(EnsembleModel(initial=initial, blocks=(), lr=cfg.lr), bundle)


def _confident(classes, num_classes, scale=5.0):
    return one_hot(classes, num_classes) * scale


def test_da_step_batches_hold_four_batch_sizes(small_bundle, source_only_model, fast_train_cfg, fit_calls):
    state = _fresh_state(small_bundle, source_only_model, fast_train_cfg)
    da_step(state, small_bundle, fast_train_cfg, np.random.default_rng(0))
    n_t, bs = small_bundle.target_labeled.size, fast_train_cfg.batch_size
    batches = fit_calls[-1]["batches"]
    assert len(batches) == small_bundle.num_classes
    for batch in batches:
        assert batch.shape[0] == 4 * bs
        assert int((batch < n_t).sum()) == 2 * bs


def test_da_step_zeroes_misclassified_source_rows_only(small_bundle, source_only_model, fast_train_cfg, fit_calls):
    num_classes = small_bundle.num_classes
    truth = class_indices(small_bundle.source.labels)
    predicted = truth.copy()
    wrong = np.array([0, 1, 2])
    predicted[wrong] = (truth[wrong] + 1) % num_classes

    state = _fresh_state(small_bundle, source_only_model, fast_train_cfg)
    state.logits[SOURCE] = _confident(predicted, num_classes)
    # every labeled target row misclassified as well: target weights must survive regardless
    target_truth = class_indices(small_bundle.target_labeled.labels)
    state.logits[TARGET_LABELED] = _confident((target_truth + 1) % num_classes, num_classes)

    da_step(state, small_bundle, fast_train_cfg, np.random.default_rng(0))
    w = fit_calls[-1]["w"]
    n_t = small_bundle.target_labeled.size
    assert np.all(w[n_t + wrong] == 0.0)
    kept = np.setdiff1d(np.arange(small_bundle.source.size), wrong)
    assert np.all(w[n_t + kept] > 0.0)
    assert np.all(w[:n_t] > 0.0)

    da_step(state, small_bundle, fast_train_cfg.model_copy(update={"remove_misclassified_source": False}),
            np.random.default_rng(0))
    assert np.all(fit_calls[-1]["w"] > 0.0)


def test_da_step_weights_bottom_out_at_the_clip_bound(small_bundle, source_only_model, fast_train_cfg, fit_calls):
    num_classes = small_bundle.num_classes
    state = _fresh_state(small_bundle, source_only_model, fast_train_cfg)
    state.logits[SOURCE] = _confident(class_indices(small_bundle.source.labels), num_classes, scale=100.0)
    state.logits[TARGET_LABELED] = _confident(class_indices(small_bundle.target_labeled.labels), num_classes,
                                              scale=100.0)
    da_step(state, small_bundle, fast_train_cfg, np.random.default_rng(0))
    np.testing.assert_allclose(fit_calls[-1]["w"], 0.9999 * 0.0001, rtol=1e-12)
    assert all(batch.shape[0] == 4 * fast_train_cfg.batch_size for batch in fit_calls[-1]["batches"])


def test_ssl_step_without_noise_uses_clean_unlabeled_features(small_bundle, source_only_model, mapped_inputs):
    cfg = TrainConfig(blocks=1, xi=0.0, batch_size=16, node_size=20)
    state = _fresh_state(small_bundle, source_only_model, cfg)
    ssl_step(state, small_bundle, cfg, np.random.default_rng(0))
    stacked = mapped_inputs[-1]
    n_t = small_bundle.target_labeled.size
    np.testing.assert_array_equal(stacked[:n_t], small_bundle.target_labeled.features)
    np.testing.assert_array_equal(stacked[n_t:], small_bundle.target_unlabeled)


def test_ssl_step_noise_skips_constant_columns(small_bundle, source_only_model, mapped_inputs):
    unlabeled = small_bundle.target_unlabeled.copy()
    unlabeled[:, 2] = 3.0
    bundle = DomainBundle(source=small_bundle.source, target_labeled=small_bundle.target_labeled,
                          target_unlabeled=unlabeled)
    cfg = TrainConfig(blocks=1, xi=1.0, batch_size=16, node_size=20)
    state = _fresh_state(bundle, source_only_model, cfg)
    ssl_step(state, bundle, cfg, np.random.default_rng(0))
    noisy = mapped_inputs[-1][bundle.target_labeled.size:]
    np.testing.assert_array_equal(noisy[:, 2], unlabeled[:, 2])
    assert not np.array_equal(noisy[:, 0], unlabeled[:, 0])


def test_ssl_step_pseudo_labels_track_the_cached_argmax(small_bundle, source_only_model, fast_train_cfg, fit_calls):
    num_classes = small_bundle.num_classes
    n_t, n_u = small_bundle.target_labeled.size, small_bundle.target_unlabeled.shape[0]
    state = _fresh_state(small_bundle, source_only_model, fast_train_cfg)

    # relabel the cache between SSL blocks: pseudo-labels must follow it each time
    for offset in (0, 1):
        cached = (np.arange(n_u) + offset) % num_classes
        state.logits[TARGET_UNLABELED] = _confident(cached, num_classes)
        ssl_step(state, small_bundle, fast_train_cfg, np.random.default_rng(offset))
        positive = fit_calls[-1]["y_tilde"][n_t:] > 0
        np.testing.assert_array_equal(positive, one_hot(cached, num_classes).astype(bool))
