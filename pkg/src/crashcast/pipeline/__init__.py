"""Ingestion, adaptive validation, imputation, and the synthetic generator."""

from .impute import (
    AllMissingFeature,
    ConditionalTable,
    ImputationModel,
    MaskedEvalReport,
    NoObservedValues,
    exclude_high_missingness,
    fit_categorical_tables,
    impute_categorical_conditional,
    impute_numeric_mice,
    masked_imputation_eval,
)
from .ingest import MissingHeader, ParseError, UnreadableFile, ingest_csv, write_csv
from .quality import (
    DEFAULT_BBOX,
    EmptyInput,
    QualityThresholds,
    ValidationReport,
    fit_adaptive_thresholds,
    validate_batch,
)
from .synthetic import (
    REFERENCE_MARGINALS,
    SyntheticConfig,
    generate_synthetic,
    plant_defects,
    plant_missing_flags,
    training_config,
)

__all__ = [
    "AllMissingFeature",
    "ConditionalTable",
    "DEFAULT_BBOX",
    "EmptyInput",
    "ImputationModel",
    "MaskedEvalReport",
    "MissingHeader",
    "NoObservedValues",
    "REFERENCE_MARGINALS",
    "ParseError",
    "QualityThresholds",
    "SyntheticConfig",
    "UnreadableFile",
    "ValidationReport",
    "exclude_high_missingness",
    "fit_adaptive_thresholds",
    "fit_categorical_tables",
    "generate_synthetic",
    "impute_categorical_conditional",
    "impute_numeric_mice",
    "ingest_csv",
    "masked_imputation_eval",
    "plant_defects",
    "plant_missing_flags",
    "training_config",
    "validate_batch",
    "write_csv",
]
