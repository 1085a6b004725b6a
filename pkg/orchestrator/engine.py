from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from boosting.logitboost import predict_labels
from boosting.ridge import LinearModel, fit_one_vs_rest, predict_linear
from boosting.sourcegen import synthesize_source
from boosting.trainer import TrainResult, predict, train
from dataset.bundle import DomainBundle, LabeledSet, class_indices
from dataset.features import load_features, save_features
from settings.config_model import ProjectConfig, SynthConfig, TrainConfig
from settings.manager import SettingsManager
from storage.model_store import load_linear_model, load_model, save_model
from storage.reports import write_predictions, write_training_log
from utils.errors import DimensionMismatchError
from utils.telemetry import TelemetryLogger, get_logger

logger = get_logger(__name__)


def training_log_path(model_path) -> Path:
    """model.json -> model_log.csv next to it."""
    model_path = Path(model_path)
    return model_path.with_name(f"{model_path.stem}_log.csv")


class Engine:
    """File-level pipelines behind the CLI: load CSVs and models, run the library, write results."""

    def __init__(
        self,
        settings_manager: Optional[SettingsManager] = None,
        telemetry: Optional[TelemetryLogger] = None,
        config: Optional[ProjectConfig] = None,
    ):
        self.settings = config if config is not None else (settings_manager or SettingsManager()).get_config()
        self.telemetry = telemetry

    def _event(self, event_type: str, **metrics):
        details = " ".join(f"{name}={value}" for name, value in metrics.items())
        logger.info(f"{event_type}: {details}")
        if self.telemetry is not None:
            self.telemetry.log_event(event_type, metrics)

    # -------------------------------------------------------------------------
    # Loading
    # -------------------------------------------------------------------------

    def load_bundle(
        self,
        source_path,
        target_labeled_path,
        target_unlabeled_path,
        num_classes: Optional[int] = None,
    ) -> DomainBundle:
        """Source fixes J unless a class count is given; target labels are checked against it."""
        source_x, source_y = load_features(source_path, has_labels=True, num_classes=num_classes)
        num_classes = source_y.shape[1]
        target_x, target_y = load_features(target_labeled_path, has_labels=True, num_classes=num_classes)
        unlabeled_x, _ = load_features(target_unlabeled_path, has_labels=False)
        return DomainBundle(
            source=LabeledSet(source_x, source_y),
            target_labeled=LabeledSet(target_x, target_y),
            target_unlabeled=unlabeled_x,
        )

    def load_test(self, test_path, num_classes: int) -> LabeledSet:
        test_x, test_y = load_features(test_path, has_labels=True, num_classes=num_classes)
        return LabeledSet(test_x, test_y)

    # -------------------------------------------------------------------------
    # Pipelines
    # -------------------------------------------------------------------------

    def bootstrap_initial(self, bundle: DomainBundle, lam: float) -> LinearModel:
        """One-vs-rest ridge classifier on labeled source ∪ labeled target."""
        features = np.vstack([bundle.source.features, bundle.target_labeled.features])
        labels = np.vstack([bundle.source.labels, bundle.target_labeled.labels])
        return fit_one_vs_rest(features, labels, lam)

    def bootstrap_from_files(
        self,
        source_path,
        target_labeled_path,
        out_path,
        lam: Optional[float] = None,
    ) -> LinearModel:
        lam = self.settings.train.ridge_lambda if lam is None else lam
        source_x, source_y = load_features(source_path, has_labels=True)
        target_x, target_y = load_features(target_labeled_path, has_labels=True, num_classes=source_y.shape[1])
        if source_x.shape[1] != target_x.shape[1]:
            raise DimensionMismatchError(
                f"source has {source_x.shape[1]} feature columns, labeled target has {target_x.shape[1]}"
            )
        features, labels = np.vstack([source_x, target_x]), np.vstack([source_y, target_y])
        model = fit_one_vs_rest(features, labels, lam)
        save_model(out_path, model)
        train_acc = float(np.mean(predict_labels(predict_linear(model, features)) == class_indices(labels)))
        self._event("bootstrap_saved", path=str(out_path), classes=model.outputs, dims=model.input_dims,
                    train_accuracy=train_acc)
        return model

    def train_from_files(
        self,
        source_path,
        target_labeled_path,
        target_unlabeled_path,
        out_path,
        cfg: Optional[TrainConfig] = None,
        init_model_path=None,
        test_path=None,
    ) -> Tuple[TrainResult, Path]:
        """
        Train an ensemble and write it plus its training log.

        Without init_model_path the initial model is bootstrapped from the
        labeled data with the training ridge lambda.

        Returns:
            (TrainResult, path of the training-log CSV)
        """
        cfg = cfg or self.settings.train
        initial = load_linear_model(init_model_path) if init_model_path is not None else None
        bundle = self.load_bundle(
            source_path, target_labeled_path, target_unlabeled_path,
            num_classes=initial.outputs if initial is not None else None,
        )
        if initial is None:
            initial = self.bootstrap_initial(bundle, cfg.ridge_lambda)
        elif initial.input_dims != bundle.dims:
            raise DimensionMismatchError(
                f"initial model expects {initial.input_dims} feature columns, data has {bundle.dims}"
            )
        test = self.load_test(test_path, bundle.num_classes) if test_path is not None else None

        self._event("train_started", blocks=cfg.blocks, source_rows=bundle.source.size,
                    target_labeled_rows=bundle.target_labeled.size,
                    target_unlabeled_rows=int(bundle.target_unlabeled.shape[0]), seed=cfg.seed)
        result = train(bundle, initial, cfg, test=test)
        save_model(out_path, result.model)
        log_path = write_training_log(training_log_path(out_path), result.log)

        final = result.log[-1] if result.log else None
        self._event("train_finished", path=str(out_path), blocks=len(result.model.blocks),
                    labeled_cross_entropy=final.labeled_cross_entropy if final else None,
                    test_accuracy=final.test_accuracy if final else None)
        return result, log_path

    def predict_from_files(self, model_path, features_path, out_path) -> Tuple[np.ndarray, np.ndarray]:
        model = load_model(model_path)
        features, _ = load_features(features_path, has_labels=False)
        if features.shape[1] != model.dims:
            raise DimensionMismatchError(
                f"model expects {model.dims} feature columns, {features_path} has {features.shape[1]}"
            )
        scores, labels = predict(model, features)
        write_predictions(out_path, scores, labels)
        self._event("predictions_written", path=str(out_path), rows=int(features.shape[0]))
        return scores, labels

    def synth_source_from_files(
        self,
        linear_layer_path,
        target_features_path,
        out_path,
        cfg: Optional[SynthConfig] = None,
    ):
        """Synthesize a labeled virtual source from a linear layer and target features."""
        cfg = cfg or self.settings.synth
        theta = load_linear_model(linear_layer_path)
        target, _ = load_features(target_features_path, has_labels=False)
        if target.shape[1] != theta.input_dims:
            raise DimensionMismatchError(
                f"linear layer expects {theta.input_dims} feature columns, {target_features_path} has {target.shape[1]}"
            )
        rng = np.random.default_rng(cfg.seed)
        synth = synthesize_source(theta, target, cfg.per_class, cfg.beta_a, cfg.beta_b, cfg.ridge_lambda, rng)
        save_features(out_path, synth.features, synth.labels)
        self._event("source_written", path=str(out_path), rows=int(synth.features.shape[0]))
        return synth
