from dataclasses import replace

import numpy as np
import pytest

from crashcast.core import CrashRecord, GeoPoint, SeverityLevel, utc
from crashcast.pipeline import (
    AllMissingFeature,
    NoObservedValues,
    exclude_high_missingness,
    fit_categorical_tables,
    generate_synthetic,
    impute_categorical_conditional,
    impute_numeric_mice,
    masked_imputation_eval,
    plant_missing_flags,
)
from crashcast.pipeline.synthetic import SyntheticConfig


def test_mice_no_missing_identity():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    filled, model = impute_numeric_mice(X, max_iter=10, tol=1e-3)
    assert np.array_equal(filled, X)
    assert model.converged
    assert model.iteration_count == 1


def test_mice_recovers_planted_linear_relation():
    rng = np.random.default_rng(1)
    a = rng.normal(size=300)
    X = np.column_stack([a, 2.0 * a])
    mask = rng.random(300) < 0.10
    X_missing = X.copy()
    X_missing[mask, 1] = np.nan
    filled, _ = impute_numeric_mice(X_missing, max_iter=10, tol=1e-8, ridge=1e-6)
    assert np.max(np.abs(filled[mask, 1] - 2.0 * a[mask])) < 1e-6


def test_mice_never_touches_observed_cells():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(100, 4))
    X_missing = X.copy()
    holes = rng.random(X.shape) < 0.15
    X_missing[holes] = np.nan
    filled, _ = impute_numeric_mice(X_missing)
    observed = ~holes
    assert np.array_equal(filled[observed], X[observed])


def test_mice_loop_contract_tol_zero():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 3))
    X[rng.random(X.shape) < 0.2] = np.nan
    _, model = impute_numeric_mice(X, max_iter=5, tol=0.0)
    assert model.iteration_count == 5
    assert not model.converged


def test_mice_all_missing_feature_raises():
    X = np.array([[1.0, np.nan], [2.0, np.nan]])
    with pytest.raises(AllMissingFeature):
        impute_numeric_mice(X)


def _cat_record(i, weather, hour=10, county="A"):
    return CrashRecord(
        id=f"c{i}", location=GeoPoint(40, -75), occurred_at=utc(2023, 1, 1, hour),
        hour_of_day=hour, crash_month=1, severity=SeverityLevel.MINOR, county=county,
        flags={}, codes={"WEATHER1": weather},
    )


def test_categorical_mode_imputation():
    records = [_cat_record(i, "4") for i in range(10)]
    records.append(_cat_record(99, None))
    completed, _ = impute_categorical_conditional(records, fields=("WEATHER1",))
    assert completed[-1].codes["WEATHER1"] == "4"


def test_categorical_tie_breaks_to_smallest_code():
    records = [_cat_record(i, "3") for i in range(5)]
    records += [_cat_record(10 + i, "1") for i in range(5)]
    records.append(_cat_record(99, None))
    completed, _ = impute_categorical_conditional(records, fields=("WEATHER1",))
    assert completed[-1].codes["WEATHER1"] == "1"


def test_categorical_fallback_chain():
    # same county, different hour bucket: context (bucket, county) is empty
    records = [_cat_record(i, "5", hour=2) for i in range(6)]
    records.append(_cat_record(99, None, hour=22))
    completed, _ = impute_categorical_conditional(records, fields=("WEATHER1",))
    assert completed[-1].codes["WEATHER1"] == "5"
    # unseen county falls back to the global mode
    records.append(_cat_record(100, None, hour=2, county="ELSEWHERE"))
    completed, _ = impute_categorical_conditional(records, fields=("WEATHER1",))
    assert completed[-1].codes["WEATHER1"] == "5"


def test_categorical_no_observed_raises():
    records = [_cat_record(i, None) for i in range(3)]
    with pytest.raises(NoObservedValues):
        fit_categorical_tables(records, fields=("WEATHER1",))


def test_categorical_tables_normalized():
    records = [_cat_record(i, "1" if i % 3 else "2") for i in range(30)]
    tables = fit_categorical_tables(records, fields=("WEATHER1",))
    for freqs in tables["WEATHER1"].by_context.values():
        assert sum(freqs.values()) == pytest.approx(1.0, abs=1e-9)
    assert sum(tables["WEATHER1"].global_freqs.values()) == pytest.approx(1.0, abs=1e-9)


def test_categorical_never_rewrites_observed():
    records = generate_synthetic(SyntheticConfig(n_records=300, seed=11))
    masked = plant_missing_flags(records, 0.1, seed=12)
    completed, _ = impute_categorical_conditional(masked)
    for before, after in zip(masked, completed):
        for name, value in before.flags.items():
            if value is not None:
                assert after.flags[name] == value
        for name, value in before.codes.items():
            if value is not None:
                assert after.codes[name] == value


def test_masked_eval_deterministic():
    records = generate_synthetic(SyntheticConfig(n_records=400, seed=13))
    r1 = masked_imputation_eval(records, 0.1, seed=99)
    r2 = masked_imputation_eval(records, 0.1, seed=99)
    assert r1 == r2


def test_masked_eval_deterministic_conditional_structure():
    # weather is a function of (hour bucket, county): conditional mode is exact
    records = []
    for i in range(200):
        hour = (i % 6) * 4
        county = "A" if i % 2 else "B"
        weather = str(1 + (hour // 4 + (0 if county == "A" else 3)) % 6)
        records.append(_cat_record(i, weather, hour=hour, county=county))
    report = masked_imputation_eval(records, 0.2, seed=5)
    assert report.categorical_accuracy == 1.0


def test_masked_eval_mice_beats_mean_baseline():
    rng = np.random.default_rng(14)
    a = rng.normal(size=400)
    X = np.column_stack([a, 2.0 * a + rng.normal(0, 0.01, size=400)])
    mask = rng.random(400) < 0.10
    X_missing = X.copy()
    X_missing[mask, 1] = np.nan
    filled, _ = impute_numeric_mice(X_missing, tol=1e-8)
    mice_mae = float(np.mean(np.abs(filled[mask, 1] - X[mask, 1])))
    baseline = np.nanmean(X_missing[:, 1])
    baseline_mae = float(np.mean(np.abs(baseline - X[mask, 1])))
    assert mice_mae <= baseline_mae


def test_masked_fraction_bounds():
    records = generate_synthetic(SyntheticConfig(n_records=50, seed=15))
    with pytest.raises(ValueError):
        masked_imputation_eval(records, 0.0, seed=0)
    with pytest.raises(ValueError):
        masked_imputation_eval(records, 0.6, seed=0)


def test_exclusion_partition():
    records = generate_synthetic(SyntheticConfig(n_records=100, seed=16))
    # strip most behavioral flags from a few records
    broken = []
    for i, r in enumerate(records):
        if i < 10:
            flags = dict(r.flags)
            for name in list(flags)[:8]:
                flags[name] = None
            r = replace(r, flags=flags, severity=None)
        broken.append(r)
    train, holdout = exclude_high_missingness(broken, threshold=0.30)
    assert len(train) + len(holdout) == len(broken)
    assert len(holdout) >= 10 * 0  # partition only; membership checked below
    ids = {r.id for r in broken[:10]}
    assert all(r.id in ids for r in holdout)


def test_exclusion_examples():
    records = generate_synthetic(SyntheticConfig(n_records=5, seed=17))
    train, holdout = exclude_high_missingness(records)
    assert holdout == []  # nothing missing

    r = records[0]
    flags = dict(r.flags)
    from crashcast.core import BEHAVIORAL_FLAGS

    for name in BEHAVIORAL_FLAGS[:4]:
        flags[name] = None
    nearly_half = replace(r, flags=flags, severity=None)  # 5 of 11 critical missing
    train, holdout = exclude_high_missingness([nearly_half])
    assert holdout == [nearly_half]
