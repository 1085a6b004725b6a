"""
Boosted fine-tuning of a linear classifier over extracted features.

Training alternates two kinds of fine-tuning blocks on top of the normalized
initial model:

- DA blocks fit labeled target + labeled source, with misclassified source
  samples dropped from the weights.
- SSL blocks fit labeled target + noise-augmented unlabeled target carrying
  hard pseudo-labels from the current ensemble.

Each block is a random feature map plus J ridge learners; its normalized
output, scaled by the learning rate, is added to the ensemble. Current logits
of every partition are cached and updated incrementally.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from dataset.bundle import DomainBundle, LabeledSet, class_indices, one_hot
from settings.config_model import TrainConfig
from utils.errors import DimensionMismatchError, EmptyDatasetError, ModelFormatError
from utils.telemetry import get_logger
from .logitboost import (
    cross_entropy,
    norm_learner,
    normalize_initial,
    predict_labels,
    working_response,
)
from .mapping import RandomFeatureMap, apply_map, build_identity_map, build_map
from .ridge import (
    LinearModel,
    fit_block_learners,
    fit_block_learners_weighted,
    predict_linear,
    stack_models,
)
from .sampling import balanced_sample

logger = get_logger(__name__)

DA = "DA"
SSL = "SSL"

SOURCE = "source"
TARGET_LABELED = "target_labeled"
TARGET_UNLABELED = "target_unlabeled"
TEST = "test"


# =============================================================================
# MODEL TYPES
# =============================================================================

@dataclass(frozen=True, eq=False)
class FineTuneBlock:
    kind: str  # DA | SSL
    feature_map: RandomFeatureMap
    learners: Tuple[LinearModel, ...]

    def __post_init__(self):
        if self.kind not in (DA, SSL):
            raise ModelFormatError(f"unknown block kind '{self.kind}'")
        learners = tuple(self.learners)
        for learner in learners:
            if learner.outputs != 1 or learner.input_dims != self.feature_map.node_size:
                raise DimensionMismatchError(
                    f"learner {learner.weights.shape} does not match node size {self.feature_map.node_size}"
                )
        object.__setattr__(self, "learners", learners)
        object.__setattr__(self, "_stacked", stack_models(learners))

    @property
    def num_classes(self) -> int:
        return len(self.learners)

    def raw_scores(self, features) -> np.ndarray:
        return predict_linear(self._stacked, apply_map(self.feature_map, features))

    def contribution(self, features, lr: float) -> np.ndarray:
        return lr * norm_learner(self.raw_scores(features))


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    """Normalized initial model plus lr-scaled normalized block outputs, summed in block order."""
    initial: LinearModel
    blocks: Tuple[FineTuneBlock, ...]
    lr: float

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        for block in self.blocks:
            if block.num_classes != self.num_classes or block.feature_map.input_dims != self.dims:
                raise DimensionMismatchError("block dimensions do not match the initial model")

    @property
    def num_classes(self) -> int:
        return self.initial.outputs

    @property
    def dims(self) -> int:
        return self.initial.input_dims

    def initial_scores(self, features) -> np.ndarray:
        return normalize_initial(predict_linear(self.initial, features))


def _check_features(model: EnsembleModel, features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.dims:
        raise DimensionMismatchError(f"model expects {model.dims} feature columns, got shape {features.shape}")
    return features


def ensemble_scores(model: EnsembleModel, features) -> np.ndarray:
    features = _check_features(model, features)
    scores = model.initial_scores(features)
    for block in model.blocks:
        scores = scores + block.contribution(features, model.lr)
    return scores


def predict(model: EnsembleModel, features) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (N×J scores, argmax labels with ties to the lowest class)."""
    scores = ensemble_scores(model, features)
    return scores, predict_labels(scores)


# =============================================================================
# TRAINING STATE
# =============================================================================

@dataclass
class BoostState:
    """Cached ensemble logits per partition, plus the transient inputs of the noisy-logit shortcut."""
    logits: Dict[str, np.ndarray]
    features: Dict[str, np.ndarray]
    last_da_block: Optional[FineTuneBlock] = None
    pre_da_unlabeled: Optional[np.ndarray] = None

    def commit(self, block: FineTuneBlock, lr: float):
        if block.kind == DA:
            self.pre_da_unlabeled = self.logits[TARGET_UNLABELED]
            self.last_da_block = block
        for name, features in self.features.items():
            self.logits[name] = self.logits[name] + block.contribution(features, lr)


@dataclass
class TrainLogEntry:
    block_index: int
    kind: str
    labeled_cross_entropy: float
    test_accuracy: Optional[float] = None


@dataclass
class TrainResult:
    model: EnsembleModel
    log: List[TrainLogEntry] = field(default_factory=list)
    state: Optional[BoostState] = None


def accuracy(scores, labels) -> float:
    labels = np.asarray(labels)
    if labels.shape[0] == 0:
        return float("nan")
    return float(np.mean(predict_labels(scores) == class_indices(labels)))


def init_state(model: EnsembleModel, bundle: DomainBundle, test: Optional[LabeledSet] = None) -> BoostState:
    features = {
        SOURCE: bundle.source.features,
        TARGET_LABELED: bundle.target_labeled.features,
        TARGET_UNLABELED: bundle.target_unlabeled,
    }
    if test is not None:
        features[TEST] = test.features
    logits = {name: ensemble_scores(model, x) for name, x in features.items()}
    return BoostState(logits=logits, features=features)


# =============================================================================
# BLOCK STEPS
# =============================================================================

def _block_map(bundle: DomainBundle, cfg: TrainConfig, rng: np.random.Generator) -> RandomFeatureMap:
    if not cfg.use_mapping:
        return build_identity_map(bundle.source.features, rng)
    return build_map(bundle.source.features, cfg.node_size, cfg.activation, rng)


def _fit(mapped, y_tilde, w, batches, cfg: TrainConfig):
    if cfg.deterministic:
        return fit_block_learners_weighted(mapped, y_tilde, w, cfg.ridge_lambda, cfg.threads)
    return fit_block_learners(mapped, y_tilde, batches, cfg.ridge_lambda, cfg.threads)


def da_step(state: BoostState, bundle: DomainBundle, cfg: TrainConfig, rng: np.random.Generator) -> FineTuneBlock:
    """Supervised DA block on labeled target followed by labeled source."""
    target, source = bundle.target_labeled, bundle.source
    n_t = target.size
    feature_map = _block_map(bundle, cfg, rng)

    labels = np.vstack([target.labels, source.labels])
    logits = np.vstack([state.logits[TARGET_LABELED], state.logits[SOURCE]])
    _, w, y_tilde = working_response(logits, labels)

    if cfg.remove_misclassified_source:
        wrong = np.flatnonzero(predict_labels(state.logits[SOURCE]) != class_indices(source.labels))
        w[n_t + wrong, :] = 0.0
        logger.info(f"source_removed: {wrong.size} of {source.size} source samples misclassified")

    mapped = apply_map(feature_map, np.vstack([target.features, source.features]))

    batches = None
    if not cfg.deterministic:
        source_active = bool(w[n_t:].sum() > 0)
        if not source_active:
            logger.warning("source_pool_empty: every source weight is zero, training on labeled target only")
        batches = []
        for j in range(bundle.num_classes):
            parts = [balanced_sample(target.labels, w[:n_t], j, cfg.batch_size, rng)]
            if source_active:
                parts.append(n_t + balanced_sample(
                    source.labels, w[n_t:], j, cfg.batch_size, rng, require_positive=False
                ))
            batches.append(np.concatenate(parts))

    learners = _fit(mapped, y_tilde, w, batches, cfg)
    return FineTuneBlock(kind=DA, feature_map=feature_map, learners=tuple(learners))


def _noisy_logits(state: BoostState, noisy: np.ndarray, lr: float) -> np.ndarray:
    # Cached logits before the latest DA block plus that block evaluated on the noisy features
    if state.last_da_block is None or state.pre_da_unlabeled is None:
        return state.logits[TARGET_UNLABELED]
    return state.pre_da_unlabeled + state.last_da_block.contribution(noisy, lr)


def ssl_step(state: BoostState, bundle: DomainBundle, cfg: TrainConfig, rng: np.random.Generator) -> FineTuneBlock:
    """SSL block on labeled target followed by noise-augmented pseudo-labeled unlabeled target."""
    target, unlabeled = bundle.target_labeled, bundle.target_unlabeled
    if unlabeled.shape[0] == 0:
        raise EmptyDatasetError("SSL blocks need at least one unlabeled target sample")
    n_t = target.size
    feature_map = _block_map(bundle, cfg, rng)

    pseudo = one_hot(predict_labels(state.logits[TARGET_UNLABELED]), bundle.num_classes)
    noise = rng.standard_normal(unlabeled.shape) * (cfg.xi * unlabeled.std(axis=0))
    noisy = unlabeled + noise

    labels = np.vstack([target.labels, pseudo])
    logits = np.vstack([state.logits[TARGET_LABELED], _noisy_logits(state, noisy, cfg.lr)])
    _, w, y_tilde = working_response(logits, labels)

    mapped = apply_map(feature_map, np.vstack([target.features, noisy]))

    batches = None
    if not cfg.deterministic:
        batches = []
        for j in range(bundle.num_classes):
            batch_t = balanced_sample(target.labels, w[:n_t], j, cfg.batch_size, rng)
            batch_u = n_t + balanced_sample(pseudo, w[n_t:], j, cfg.batch_size, rng, require_positive=False)
            batches.append(np.concatenate([batch_t, batch_u]))

    learners = _fit(mapped, y_tilde, w, batches, cfg)
    return FineTuneBlock(kind=SSL, feature_map=feature_map, learners=tuple(learners))


# =============================================================================
# TRAINING LOOP
# =============================================================================

def _log_entry(state: BoostState, bundle: DomainBundle, test: Optional[LabeledSet], index: int, kind: str) -> TrainLogEntry:
    ce = float(np.mean(cross_entropy(state.logits[TARGET_LABELED], bundle.target_labeled.labels)))
    test_acc = accuracy(state.logits[TEST], test.labels) if test is not None else None
    return TrainLogEntry(block_index=index, kind=kind, labeled_cross_entropy=ce, test_accuracy=test_acc)


def train(
    bundle: DomainBundle,
    initial: LinearModel,
    cfg: TrainConfig,
    test: Optional[LabeledSet] = None,
) -> TrainResult:
    """
    Run cfg.blocks DA/SSL block pairs on top of `initial`.

    Args:
        bundle: source, labeled target and unlabeled target features
        initial: J×d linear classifier being fine-tuned
        cfg: training configuration
        test: optional labeled target test set for per-block accuracy

    Returns:
        TrainResult with the ensemble, the per-block log and the final cached state
    """
    if initial.outputs != bundle.num_classes or initial.input_dims != bundle.dims:
        raise DimensionMismatchError(
            f"initial model is {initial.outputs}×{initial.input_dims}, "
            f"data has {bundle.num_classes} classes and {bundle.dims} dims"
        )
    if test is not None and (test.features.shape[1] != bundle.dims or test.num_classes != bundle.num_classes):
        raise DimensionMismatchError("test set dimensions do not match the bundle")
    if cfg.blocks > 0 and bundle.target_unlabeled.shape[0] == 0:
        raise EmptyDatasetError("training needs at least one unlabeled target sample")

    rng = np.random.default_rng(cfg.seed)
    model = EnsembleModel(initial=initial, blocks=(), lr=cfg.lr)
    state = init_state(model, bundle, test)
    blocks: List[FineTuneBlock] = []
    log: List[TrainLogEntry] = []

    for k in range(cfg.blocks):
        for kind, step in ((DA, da_step), (SSL, ssl_step)):
            block = step(state, bundle, cfg, rng)
            state.commit(block, cfg.lr)
            blocks.append(block)
            entry = _log_entry(state, bundle, test, len(blocks), kind)
            log.append(entry)
            test_note = f" test_accuracy={entry.test_accuracy:.4f}" if entry.test_accuracy is not None else ""
            logger.info(
                f"block_trained: {entry.block_index} {kind} "
                f"labeled_cross_entropy={entry.labeled_cross_entropy:.6f}{test_note}"
            )

    state.last_da_block = None
    state.pre_da_unlabeled = None
    return TrainResult(model=EnsembleModel(initial=initial, blocks=tuple(blocks), lr=cfg.lr), log=log, state=state)
