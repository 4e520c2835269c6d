"""Two-method imputation with masked-value evaluation.

Numeric features go through chained ridge regressions (each incomplete
feature regressed on all others, iterated to a tolerance). Categorical
features take the mode of the empirical distribution conditioned on
(4-hour bin, county), falling back to county-level then global modes.
Observed cells are never rewritten; only missing cells change.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..core import BEHAVIORAL_FLAGS, CANONICAL_CODES, CANONICAL_FLAGS, CrashRecord

NUMERIC_FIELDS = ("DEC_LAT", "DEC_LONG", "HOUR_OF_DAY", "CRASH_MONTH")
CATEGORICAL_FIELDS = CANONICAL_FLAGS + CANONICAL_CODES
HOUR_BUCKET_WIDTH = 4


class AllMissingFeature(ValueError):
    pass


class NoObservedValues(ValueError):
    pass


@dataclass(frozen=True)
class RidgeModel:
    coef: np.ndarray  # over the other features, in column order
    intercept: float


@dataclass
class ImputationModel:
    numeric_models: dict[int, RidgeModel] = field(default_factory=dict)
    categorical_tables: dict = field(default_factory=dict)
    column_means: Optional[np.ndarray] = None
    iteration_count: int = 0
    converged: bool = False
    ridge: float = 1e-6


def _fit_ridge(A: np.ndarray, y: np.ndarray, ridge: float) -> RidgeModel:
    # intercept via augmented ones column, left unpenalized
    n, d = A.shape
    Z = np.hstack([A, np.ones((n, 1))])
    penalty = np.diag(np.r_[np.full(d, ridge), 0.0])
    beta = np.linalg.solve(Z.T @ Z + penalty, Z.T @ y)
    return RidgeModel(coef=beta[:d], intercept=float(beta[d]))


def impute_numeric_mice(
    X: np.ndarray,
    max_iter: int = 10,
    tol: float = 1e-3,
    ridge: float = 1e-6,
) -> tuple[np.ndarray, ImputationModel]:
    """Fill NaN cells of a numeric matrix by chained ridge regressions.

    Initialized from column means, then each feature with missing cells is
    regressed on all others and its missing cells re-predicted, until the
    largest per-cell change drops below tol or max_iter passes run.
    """
    X = np.asarray(X, dtype=float)
    filled = X.copy()
    n, d = X.shape
    missing = np.isnan(X)
    model = ImputationModel(ridge=ridge)

    for j in range(d):
        if missing[:, j].all():
            raise AllMissingFeature(f"feature column {j} has no observed values")

    col_means = np.nanmean(X, axis=0)
    model.column_means = col_means
    for j in range(d):
        filled[missing[:, j], j] = col_means[j]

    incomplete = [j for j in range(d) if missing[:, j].any()]
    others = {j: np.asarray([i for i in range(d) if i != j]) for j in incomplete}

    for iteration in range(1, max_iter + 1):
        model.iteration_count = iteration
        max_delta = 0.0
        for j in incomplete:
            obs = ~missing[:, j]
            reg = _fit_ridge(filled[np.ix_(obs, others[j])], filled[obs, j], ridge)
            model.numeric_models[j] = reg
            rows = missing[:, j]
            pred = filled[np.ix_(rows, others[j])] @ reg.coef + reg.intercept
            delta = np.abs(pred - filled[rows, j])
            if delta.size:
                max_delta = max(max_delta, float(delta.max()))
            filled[rows, j] = pred
        if max_delta < tol:
            model.converged = True
            break
    return filled, model


def _hour_bucket(hour: Optional[int]) -> Optional[int]:
    return None if hour is None else hour // HOUR_BUCKET_WIDTH


def _code_sort_key(code: str):
    try:
        return (0, int(code), code)
    except ValueError:
        return (1, 0, code)


def _normalize(counts: dict[str, int]) -> dict[str, float]:
    total = sum(counts.values())
    return {c: v / total for c, v in counts.items()}


def _mode(freqs: dict[str, float]) -> str:
    best_p = max(freqs.values())
    candidates = [c for c, p in freqs.items() if p == best_p]
    return min(candidates, key=_code_sort_key)


@dataclass
class ConditionalTable:
    """Per-field conditional frequency table with a fallback chain:
    (hour bucket, county) -> county -> global."""

    by_context: dict[tuple, dict[str, float]] = field(default_factory=dict)
    by_county: dict[str, dict[str, float]] = field(default_factory=dict)
    global_freqs: dict[str, float] = field(default_factory=dict)

    def impute(self, hour_bucket: Optional[int], county: str) -> str:
        ctx = self.by_context.get((hour_bucket, county))
        if ctx:
            return _mode(ctx)
        cty = self.by_county.get(county)
        if cty:
            return _mode(cty)
        return _mode(self.global_freqs)


def _categorical_value(record: CrashRecord, name: str) -> Optional[str]:
    if name in CANONICAL_FLAGS:
        v = record.flags.get(name)
        return None if v is None else str(v)
    return record.codes.get(name)


def fit_categorical_tables(records: Sequence[CrashRecord],
                           fields: Sequence[str] = CATEGORICAL_FIELDS) -> dict[str, ConditionalTable]:
    raw: dict[str, dict] = {
        name: {"ctx": {}, "county": {}, "global": {}} for name in fields
    }
    for record in records:
        bucket = _hour_bucket(record.hour_of_day)
        for name in fields:
            value = _categorical_value(record, name)
            if value is None:
                continue
            buckets = raw[name]
            buckets["ctx"].setdefault((bucket, record.county), {}).setdefault(value, 0)
            buckets["ctx"][(bucket, record.county)][value] += 1
            buckets["county"].setdefault(record.county, {}).setdefault(value, 0)
            buckets["county"][record.county][value] += 1
            buckets["global"].setdefault(value, 0)
            buckets["global"][value] += 1

    tables: dict[str, ConditionalTable] = {}
    for name in fields:
        if not raw[name]["global"]:
            raise NoObservedValues(f"{name} has no observed values")
        tables[name] = ConditionalTable(
            by_context={k: _normalize(v) for k, v in raw[name]["ctx"].items()},
            by_county={k: _normalize(v) for k, v in raw[name]["county"].items()},
            global_freqs=_normalize(raw[name]["global"]),
        )
    return tables


def impute_categorical_conditional(
    records: Sequence[CrashRecord],
    fields: Sequence[str] = CATEGORICAL_FIELDS,
    tables: Optional[dict[str, ConditionalTable]] = None,
) -> tuple[list[CrashRecord], dict[str, ConditionalTable]]:
    """Fill missing flags/codes from conditional modes; observed cells are
    left untouched. Ties break toward the smallest code."""
    if tables is None:
        tables = fit_categorical_tables(records, fields)
    out: list[CrashRecord] = []
    for record in records:
        bucket = _hour_bucket(record.hour_of_day)
        new_flags = dict(record.flags)
        new_codes = dict(record.codes)
        changed = False
        for name in fields:
            if _categorical_value(record, name) is not None:
                continue
            value = tables[name].impute(bucket, record.county)
            if name in CANONICAL_FLAGS:
                new_flags[name] = int(value)
            else:
                new_codes[name] = value
            changed = True
        out.append(replace(record, flags=new_flags, codes=new_codes) if changed else record)
    return out, tables


def _numeric_value(record: CrashRecord, name: str) -> Optional[float]:
    if name == "DEC_LAT":
        return record.location.lat if record.location else None
    if name == "DEC_LONG":
        return record.location.lon if record.location else None
    if name == "HOUR_OF_DAY":
        return None if record.hour_of_day is None else float(record.hour_of_day)
    if name == "CRASH_MONTH":
        return None if record.crash_month is None else float(record.crash_month)
    raise KeyError(name)


def records_numeric_matrix(records: Sequence[CrashRecord]) -> np.ndarray:
    X = np.full((len(records), len(NUMERIC_FIELDS)), np.nan)
    for i, record in enumerate(records):
        for j, name in enumerate(NUMERIC_FIELDS):
            v = _numeric_value(record, name)
            if v is not None:
                X[i, j] = v
    return X


@dataclass
class MaskedEvalReport:
    categorical_accuracy: float
    numeric_mae: float
    masked_fraction: float
    categorical_cells: int
    numeric_cells: int

    def to_dict(self) -> dict:
        return {
            "categorical_accuracy": self.categorical_accuracy,
            "numeric_mae": self.numeric_mae,
            "masked_fraction": self.masked_fraction,
            "categorical_cells": self.categorical_cells,
            "numeric_cells": self.numeric_cells,
        }


def masked_imputation_eval(
    records: Sequence[CrashRecord],
    mask_fraction: float,
    seed: int,
    max_iter: int = 10,
    tol: float = 1e-3,
) -> MaskedEvalReport:
    """Mask a fraction of known cells, impute, score against the truth.

    Categorical cells score exact-match accuracy; numeric cells score mean
    absolute error. Only masked cells enter either figure.
    """
    if not 0.0 < mask_fraction <= 0.5:
        raise ValueError("mask_fraction must be in (0, 0.5]")
    rng = np.random.default_rng(seed)

    X = records_numeric_matrix(records)
    observed_numeric = np.argwhere(~np.isnan(X))
    # only fields with at least one observation can be masked and re-imputed
    eval_fields = tuple(
        name for name in CATEGORICAL_FIELDS
        if any(_categorical_value(r, name) is not None for r in records)
    )
    cat_cells = [
        (i, name)
        for i, r in enumerate(records)
        for name in eval_fields
        if _categorical_value(r, name) is not None
    ]

    n_num = int(round(mask_fraction * len(observed_numeric)))
    n_cat = int(round(mask_fraction * len(cat_cells)))
    num_pick = rng.choice(len(observed_numeric), size=n_num, replace=False) if n_num else np.empty(0, int)
    cat_pick = rng.choice(len(cat_cells), size=n_cat, replace=False) if n_cat else np.empty(0, int)

    X_masked = X.copy()
    truth_num = []
    for k in num_pick:
        i, j = observed_numeric[k]
        truth_num.append(X[i, j])
        X_masked[i, j] = np.nan
    X_imputed, _ = impute_numeric_mice(X_masked, max_iter=max_iter, tol=tol)
    numeric_mae = 0.0
    if len(num_pick):
        preds = np.array([X_imputed[observed_numeric[k][0], observed_numeric[k][1]] for k in num_pick])
        numeric_mae = float(np.mean(np.abs(preds - np.array(truth_num))))

    masked_records = list(records)
    truth_cat: list[tuple[int, str, str]] = []
    masked_by_row: dict[int, list[str]] = {}
    for k in cat_pick:
        i, name = cat_cells[k]
        truth_cat.append((i, name, _categorical_value(records[i], name)))
        masked_by_row.setdefault(i, []).append(name)
    for i, names in masked_by_row.items():
        r = masked_records[i]
        flags = dict(r.flags)
        codes = dict(r.codes)
        for name in names:
            if name in CANONICAL_FLAGS:
                flags[name] = None
            else:
                codes[name] = None
        masked_records[i] = replace(r, flags=flags, codes=codes)

    imputed_records, _ = impute_categorical_conditional(masked_records, fields=eval_fields)
    correct = sum(
        1 for i, name, truth in truth_cat
        if _categorical_value(imputed_records[i], name) == truth
    )
    categorical_accuracy = correct / len(truth_cat) if truth_cat else 0.0

    return MaskedEvalReport(
        categorical_accuracy=categorical_accuracy,
        numeric_mae=numeric_mae,
        masked_fraction=mask_fraction,
        categorical_cells=len(truth_cat),
        numeric_cells=len(num_pick),
    )


CRITICAL_FIELDS = ("location", "occurred_at", "severity") + BEHAVIORAL_FLAGS


def exclude_high_missingness(
    records: Sequence[CrashRecord],
    threshold: float = 0.30,
) -> tuple[list[CrashRecord], list[CrashRecord]]:
    """Partition into (training set, robustness hold-out) by the fraction of
    critical fields missing; strictly more than `threshold` goes to hold-out."""
    training: list[CrashRecord] = []
    holdout: list[CrashRecord] = []
    n_critical = len(CRITICAL_FIELDS)
    for record in records:
        missing = 0
        if record.location is None:
            missing += 1
        if record.occurred_at is None:
            missing += 1
        if record.severity is None:
            missing += 1
        missing += sum(1 for name in BEHAVIORAL_FLAGS if record.flags.get(name) is None)
        if missing / n_critical > threshold:
            holdout.append(record)
        else:
            training.append(record)
    return training, holdout
