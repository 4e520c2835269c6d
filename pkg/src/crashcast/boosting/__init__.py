"""Two-variant gradient boosting with GOSS sampling, meta-weighted
ensembling, and additive attribution."""

from .attribution import (
    AttributionResult,
    TooManyFeatures,
    attribute_prediction,
    brute_force_shapley,
    grouped_factor_shares,
)
from .booster import (
    DEPTHWISE_PRESET,
    LEAFWISE_PRESET,
    BoosterConfig,
    FittedBooster,
    SingleClassInput,
    Variant,
    fit_depthwise,
    fit_leafwise_goss,
)
from .ensemble import (
    ContextBucket,
    EnsembleModel,
    MetaWeights,
    UnfittedModel,
    bucket_for,
    ensemble_predict,
    fit_meta_weights,
)
from .goss import EmptyInput, GossConfig, goss_sample
from .gradients import multiclass_log_loss, softmax, softmax_gradients
from .kernels import BACKEND as KERNEL_BACKEND
from .model_io import load_model, model_from_dict, model_to_dict, save_model
from .tree import Tree, TreeParams

__all__ = [
    "AttributionResult",
    "BoosterConfig",
    "ContextBucket",
    "DEPTHWISE_PRESET",
    "EmptyInput",
    "EnsembleModel",
    "FittedBooster",
    "GossConfig",
    "KERNEL_BACKEND",
    "LEAFWISE_PRESET",
    "MetaWeights",
    "SingleClassInput",
    "TooManyFeatures",
    "Tree",
    "TreeParams",
    "UnfittedModel",
    "Variant",
    "attribute_prediction",
    "brute_force_shapley",
    "bucket_for",
    "ensemble_predict",
    "fit_depthwise",
    "fit_leafwise_goss",
    "fit_meta_weights",
    "goss_sample",
    "grouped_factor_shares",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "multiclass_log_loss",
    "save_model",
    "softmax",
    "softmax_gradients",
]
