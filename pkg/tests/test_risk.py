import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashcast.core import CrashRecord, GeoPoint, SeverityLevel, utc
from crashcast.features import (
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
    weighted_risk,
)
from crashcast.features.weather_knn import archetype_snapshot


def _rec(flags=None, weather=None):
    return CrashRecord(
        id="r", location=GeoPoint(40, -75), occurred_at=utc(2023, 1, 1, 12),
        hour_of_day=12, crash_month=1, severity=SeverityLevel.MINOR,
        flags=flags or {}, codes={"WEATHER1": weather} if weather else {},
    )


def test_weighted_risk_reference_weights():
    assert weighted_risk((1, 1, 0), (0.4, 0.4, 0.2)) == pytest.approx(0.8, abs=1e-12)


def test_weighted_risk_bounds():
    assert weighted_risk((0, 0, 0), (0.4, 0.4, 0.2)) == 0.0
    assert weighted_risk((1, 1, 1), (0.4, 0.4, 0.2)) == 1.0


def test_weighted_risk_length_mismatch():
    with pytest.raises(LengthMismatch):
        weighted_risk((1, 0), (0.4, 0.4, 0.2))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=1), min_size=3, max_size=3),
       st.integers(min_value=0, max_value=2))
def test_weighted_risk_monotone(flags, idx):
    w = (0.4, 0.4, 0.2)
    base = weighted_risk(flags, w)
    raised = list(flags)
    raised[idx] = 1
    assert weighted_risk(raised, w) >= base


def test_behavioral_weights_sum_validation():
    with pytest.raises(ValueError):
        BehavioralRiskWeights(impairment=(0.5, 0.4, 0.2))


def test_weather_map_values():
    assert WEATHER_RISK_MAP == {"1": 0.2, "2": 0.4, "3": 0.6, "4": 0.8, "5": 0.9, "6": 0.7}


def test_environmental_features_examples():
    _, w_risk, _ = environmental_features(_rec(weather="4"))
    assert w_risk == 0.8

    adverse, _, _ = environmental_features(_rec(flags={"ICY_ROAD": 1, "WET_ROAD": 1, "SNOW_SLUSH_ROAD": 1}))
    assert adverse == pytest.approx(1.0, abs=1e-9)

    adverse, w_risk, total = environmental_features(
        _rec(flags={"ICY_ROAD": 1, "WET_ROAD": 1, "SNOW_SLUSH_ROAD": 1}, weather="4"))
    assert total == pytest.approx(0.6 * 0.8 + 0.4 * 1.0, abs=1e-9)
    assert total == pytest.approx(0.88, abs=1e-9)


def test_environmental_default_weather_risk():
    _, w_risk, _ = environmental_features(_rec())
    assert w_risk == 0.2
    _, w_risk, _ = environmental_features(_rec(weather="77"))
    assert w_risk == 0.2


def test_combine_environmental_examples():
    w = EnvironmentalRiskWeights()
    assert combine_environmental(0.6, 0.6, 0.6, w) == pytest.approx(0.6, abs=1e-12)
    w2 = EnvironmentalRiskWeights(alpha=0.5, beta=0.3, gamma=0.2)
    assert combine_environmental(1.0, 0.0, 0.0, w2) == pytest.approx(0.5, abs=1e-12)
    assert combine_environmental(0.0, 0.0, 0.0, w2) == 0.0


def test_combine_environmental_range_check():
    w = EnvironmentalRiskWeights()
    with pytest.raises(ComponentOutOfRange):
        combine_environmental(1.2, 0.0, 0.0, w)
    with pytest.raises(ComponentOutOfRange):
        combine_environmental(0.0, -0.1, 0.0, w)


def test_environmental_risk_E_uses_visibility():
    snap = archetype_snapshot("6", 1, 12)  # fog: 0.8 km visibility
    w = EnvironmentalRiskWeights(alpha=0.0, beta=0.0, gamma=1.0)
    assert environmental_risk_E(snap, 0.0, None, w) == pytest.approx(visibility_factor(0.8), abs=1e-12)


def test_visibility_factor_clamps():
    assert visibility_factor(0.0) == 1.0
    assert visibility_factor(10.0) == 0.0
    assert visibility_factor(25.0) == 0.0


def _fit_rows(rng, n, signal="W"):
    W = rng.random(n)
    R = rng.random(n)
    V = rng.random(n)
    driver = {"W": W, "R": R, "V": V}[signal]
    y = (driver + 0.1 * rng.normal(size=n)) > 0.5
    return np.column_stack([W, R, V]), y


def _labeled(outcomes):
    from dataclasses import replace

    return [
        replace(_rec(), severity=SeverityLevel.SERIOUS if flag else SeverityLevel.MINOR)
        for flag in outcomes
    ]


def test_fit_weights_planted_weather_signal():
    rng = np.random.default_rng(21)
    X, y = _fit_rows(rng, 2000, signal="W")
    weights = fit_environmental_weights(_labeled(y), components=X)
    assert weights.alpha >= 0.8
    assert weights.alpha + weights.beta + weights.gamma == pytest.approx(1.0, abs=1e-9)


def test_fit_weights_degenerate_outcome():
    rng = np.random.default_rng(22)
    X = rng.random((600, 3))
    with pytest.raises(DegenerateDesign):
        fit_environmental_weights(_labeled([False] * 600), components=X)


def test_fit_weights_degenerate_column():
    rng = np.random.default_rng(23)
    X = rng.random((600, 3))
    X[:, 1] = 0.5
    with pytest.raises(DegenerateDesign):
        fit_environmental_weights(_labeled([i % 2 == 0 for i in range(600)]), components=X)


def test_fit_weights_projection_contract_random_datasets():
    rng = np.random.default_rng(24)
    for _ in range(50):
        n = 500
        X = rng.random((n, 3))
        logits = rng.normal(size=3) @ X.T + rng.normal(0, 0.5, size=n)
        y = logits > np.median(logits)
        w = fit_environmental_weights(_labeled(y), components=X)
        assert w.alpha >= 0 and w.beta >= 0 and w.gamma >= 0
        assert w.alpha + w.beta + w.gamma == pytest.approx(1.0, abs=1e-9)


def test_fit_weights_needs_enough_records():
    with pytest.raises(ValueError):
        fit_environmental_weights([_rec()] * 100)
