# Boosting: LogitBoost arithmetic, random feature maps, balanced sampling,
# ridge base learners, the DA/SSL fine-tuning trainer and virtual source synthesis.

from boosting.logitboost import (
    clip_prob,
    cross_entropy,
    logit_derivatives,
    norm_learner,
    normalize_initial,
    predict_labels,
    pseudo_label,
    sample_weight,
    softmax_prob,
    working_response,
)
from boosting.mapping import RandomFeatureMap, apply_map, build_identity_map, build_map
from boosting.sampling import balanced_sample, down_sample, weighted_sample
from boosting.ridge import (
    LinearModel,
    fit_block_learners,
    fit_block_learners_weighted,
    fit_one_vs_rest,
    fit_ridge,
    predict_linear,
    solve_ridge,
)
from boosting.trainer import (
    BoostState,
    EnsembleModel,
    FineTuneBlock,
    TrainLogEntry,
    TrainResult,
    accuracy,
    da_step,
    ensemble_scores,
    init_state,
    predict,
    ssl_step,
    train,
)
from boosting.sourcegen import (
    SynthesizedSource,
    align_moments,
    generate_soft_labels,
    reconstruct_features,
    synthesize_source,
)

__all__ = [
    "clip_prob",
    "cross_entropy",
    "logit_derivatives",
    "norm_learner",
    "normalize_initial",
    "predict_labels",
    "pseudo_label",
    "sample_weight",
    "softmax_prob",
    "working_response",
    "RandomFeatureMap",
    "apply_map",
    "build_identity_map",
    "build_map",
    "balanced_sample",
    "down_sample",
    "weighted_sample",
    "LinearModel",
    "fit_block_learners",
    "fit_block_learners_weighted",
    "fit_one_vs_rest",
    "fit_ridge",
    "predict_linear",
    "solve_ridge",
    "BoostState",
    "EnsembleModel",
    "FineTuneBlock",
    "TrainLogEntry",
    "TrainResult",
    "accuracy",
    "da_step",
    "ensemble_scores",
    "init_state",
    "predict",
    "ssl_step",
    "train",
    "SynthesizedSource",
    "align_moments",
    "generate_soft_labels",
    "reconstruct_features",
    "synthesize_source",
]
