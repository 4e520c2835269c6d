import numpy as np
import pytest

from crashcast.core import SeverityLevel
from crashcast.features import EmptyHistory, WeatherKnnModel, archetype_snapshot, weather_knn_risk
from crashcast.features.weather_knn import snapshot_features, weather_knn_risk_model


def _snap(rng, category=None):
    cat = category or str(rng.integers(1, 7))
    base = archetype_snapshot(cat, int(rng.integers(1, 13)), int(rng.integers(0, 24)))
    return base


def _history(rng, n):
    return [( _snap(rng), SeverityLevel(int(rng.integers(0, 4))) ) for _ in range(n)]


def test_k1_fatal_neighbor_scores_one():
    rng = np.random.default_rng(40)
    snap = archetype_snapshot("4", 1, 8)
    history = [(snap, SeverityLevel.FATAL)]
    assert weather_knn_risk(snap, history, k=1) == pytest.approx(1.0)


def test_all_minor_history_scores_zero():
    rng = np.random.default_rng(41)
    history = [(_snap(rng), SeverityLevel.MINOR) for _ in range(50)]
    for _ in range(5):
        assert weather_knn_risk(_snap(rng), history, k=10) == 0.0


def brute_force_knn_risk(query, history, k):
    feats = np.stack([snapshot_features(s) for s, _ in history])
    sev = np.array([int(lvl) for _, lvl in history])
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    z = (feats - mean) / std
    q = (snapshot_features(query) - mean) / std
    d = np.sqrt(((z - q) ** 2).sum(axis=1))
    ranked = sorted(range(len(history)), key=lambda i: (d[i], i))[:k]
    w = 1.0 / (d[ranked] + 1e-6)
    return float(np.dot(w, sev[ranked] / 3.0) / w.sum())


def test_matches_exhaustive_oracle():
    rng = np.random.default_rng(42)
    history = _history(rng, 400)
    model = WeatherKnnModel.fit(history, k=25)
    for _ in range(200):
        q = _snap(rng)
        assert model.risk_for(q) == pytest.approx(brute_force_knn_risk(q, history, 25), abs=1e-12)


def test_bounded_by_neighbor_severities():
    rng = np.random.default_rng(43)
    history = _history(rng, 200)
    model = WeatherKnnModel.fit(history, k=15)
    feats = np.stack([snapshot_features(s) for s, _ in history])
    sev = np.array([int(lvl) for _, lvl in history])
    z = (feats - model.mean) / model.std
    for _ in range(50):
        q = _snap(rng)
        qz = (snapshot_features(q) - model.mean) / model.std
        d = np.sqrt(((z - qz) ** 2).sum(axis=1))
        ranked = sorted(range(len(history)), key=lambda i: (d[i], i))[:15]
        lo, hi = sev[ranked].min() / 3.0, sev[ranked].max() / 3.0
        risk = model.risk_for(q)
        assert lo - 1e-12 <= risk <= hi + 1e-12


def test_empty_history_raises():
    with pytest.raises(EmptyHistory):
        WeatherKnnModel.fit([])


def test_k_bounds():
    rng = np.random.default_rng(44)
    history = _history(rng, 10)
    model = WeatherKnnModel.fit(history, k=5)
    with pytest.raises(ValueError):
        weather_knn_risk_model(model, _snap(rng), 11)
    with pytest.raises(ValueError):
        weather_knn_risk_model(model, _snap(rng), 0)


def test_archetype_snapshot_seasonality():
    january = archetype_snapshot("1", 1, 12)
    july = archetype_snapshot("1", 7, 12)
    assert july.temperature_c > january.temperature_c
    night = archetype_snapshot("1", 7, 2)
    assert night.temperature_c < july.temperature_c
