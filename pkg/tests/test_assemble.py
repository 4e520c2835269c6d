import numpy as np
import pytest

from crashcast.core import CrashRecord, GeoPoint, SeverityLevel, utc
from crashcast.features import (
    FACTOR_GROUPS,
    FEATURE_NAMES,
    assemble_feature_vector,
    assemble_features,
    context_from_dict,
    context_to_dict,
    factor_group_indices,
)


def _zero_flag_record():
    from crashcast.core import CANONICAL_FLAGS

    return CrashRecord(
        id="probe", location=GeoPoint(40.0, -75.2), occurred_at=utc(2023, 6, 15, 12),
        hour_of_day=12, crash_month=6, severity=SeverityLevel.MINOR, county="C00",
        flags={name: 0 for name in CANONICAL_FLAGS},
        codes={"WEATHER1": "1", "ILLUMINATION": "1", "ROAD_CONDITION": "1"},
    )


def test_zero_flag_clear_noon_record(feature_setup):
    context, _, _ = feature_setup
    vec = assemble_feature_vector(_zero_flag_record(), context)
    names = dict(zip(FEATURE_NAMES, vec))
    assert names["impairment_risk"] == 0.0
    assert names["distraction_risk"] == 0.0
    assert names["adverse_road_conditions"] == 0.0
    assert names["weather_risk"] == 0.2
    assert names["hour_sin"] == pytest.approx(0.0, abs=1e-12)
    assert names["hour_cos"] == pytest.approx(-1.0, abs=1e-12)


def test_assembly_deterministic(feature_setup, training_records):
    context, _, _ = feature_setup
    r = training_records[17]
    v1 = assemble_feature_vector(r, context)
    v2 = assemble_feature_vector(r, context)
    assert np.array_equal(v1, v2)


def test_vector_length_constant(feature_setup, training_records):
    context, X, _ = feature_setup
    assert X.shape[1] == len(FEATURE_NAMES)
    widths = {assemble_feature_vector(r, context).shape[0] for r in training_records[:50]}
    assert widths == {len(FEATURE_NAMES)}


def test_risk_outputs_within_bounds(feature_setup):
    _, X, _ = feature_setup
    risk_cols = [FEATURE_NAMES.index(n) for n in (
        "impairment_risk", "distraction_risk", "adverse_road_conditions",
        "weather_risk", "total_environmental_risk", "weather_knn_risk")]
    assert X[:, risk_cols].min() >= 0.0
    assert X[:, risk_cols].max() <= 1.0
    trig_cols = [FEATURE_NAMES.index(n) for n in ("hour_sin", "hour_cos", "month_sin", "month_cos")]
    assert np.abs(X[:, trig_cols]).max() <= 1.0
    hs, hc = FEATURE_NAMES.index("hour_sin"), FEATURE_NAMES.index("hour_cos")
    assert np.allclose(X[:, hs] ** 2 + X[:, hc] ** 2, 1.0, atol=1e-9)


def test_factor_groups_cover_all_features():
    indices = factor_group_indices()
    covered = sorted(i for idxs in indices.values() for i in idxs)
    assert covered == list(range(len(FEATURE_NAMES)))
    assert set(FACTOR_GROUPS) == {"weather", "temporal", "historical", "behavioral", "geometry"}


def test_context_json_roundtrip(feature_setup, training_records):
    context, _, _ = feature_setup
    doc = context_to_dict(context)
    back = context_from_dict(doc)
    for r in training_records[:20]:
        assert np.array_equal(assemble_feature_vector(r, context),
                              assemble_feature_vector(r, back))


def test_context_rejects_foreign_documents():
    with pytest.raises(ValueError):
        context_from_dict({"format": "something-else"})


def test_batch_matches_single(feature_setup, training_records):
    context, _, _ = feature_setup
    rows = training_records[:10]
    batch = assemble_features(rows, context)
    single = np.stack([assemble_feature_vector(r, context) for r in rows])
    assert np.array_equal(batch, single)
