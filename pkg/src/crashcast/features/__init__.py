"""Feature engineering: risk scores, cyclical time, clustering, weather kNN."""

from .assemble import (
    FACTOR_GROUPS,
    FEATURE_NAMES,
    FeatureContext,
    assemble_feature_vector,
    assemble_features,
    context_from_dict,
    context_to_dict,
    factor_group_indices,
    fit_feature_context,
    load_context,
    save_context,
)
from .cluster import (
    NOISE,
    ClusterAssignment,
    ClusterParams,
    adaptive_eps,
    cluster_density,
    dbscan_haversine,
    min_enclosing_radius_km,
)
from .encode import cyclical_encode
from .risk import (
    WEATHER_RISK_DEFAULT,
    WEATHER_RISK_MAP,
    BehavioralRiskWeights,
    ComponentOutOfRange,
    DegenerateDesign,
    EnvironmentalRiskWeights,
    LengthMismatch,
    combine_environmental,
    environmental_features,
    environmental_risk_E,
    fit_environmental_weights,
    visibility_factor,
    weather_category_risk,
    weighted_risk,
)
from .weather_knn import (
    EmptyHistory,
    WeatherKnnModel,
    archetype_snapshot,
    snapshot_features,
    weather_knn_risk,
)

__all__ = [
    "FACTOR_GROUPS",
    "FEATURE_NAMES",
    "NOISE",
    "WEATHER_RISK_DEFAULT",
    "WEATHER_RISK_MAP",
    "BehavioralRiskWeights",
    "ClusterAssignment",
    "ClusterParams",
    "ComponentOutOfRange",
    "DegenerateDesign",
    "EmptyHistory",
    "EnvironmentalRiskWeights",
    "FeatureContext",
    "LengthMismatch",
    "WeatherKnnModel",
    "adaptive_eps",
    "archetype_snapshot",
    "assemble_feature_vector",
    "assemble_features",
    "cluster_density",
    "combine_environmental",
    "context_from_dict",
    "context_to_dict",
    "cyclical_encode",
    "dbscan_haversine",
    "environmental_features",
    "environmental_risk_E",
    "factor_group_indices",
    "fit_environmental_weights",
    "fit_feature_context",
    "load_context",
    "min_enclosing_radius_km",
    "save_context",
    "snapshot_features",
    "visibility_factor",
    "weather_category_risk",
    "weather_knn_risk",
    "weighted_risk",
]
