from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from crashcast.boosting import (
    BoosterConfig,
    EnsembleModel,
    GossConfig,
    Variant,
    bucket_for,
    fit_depthwise,
    fit_leafwise_goss,
    fit_meta_weights,
)
from crashcast.features import FEATURE_NAMES, assemble_features, fit_feature_context
from crashcast.pipeline import generate_synthetic, training_config
from crashcast.service import (
    CrashStore,
    FixtureWeatherSource,
    RiskService,
    ServiceConfig,
    write_weather_fixture,
)

FIXED_NOW = datetime(2023, 6, 15, 14, 3, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def training_records():
    return generate_synthetic(training_config(4000, seed=7))


@pytest.fixture(scope="session")
def feature_setup(training_records):
    context = fit_feature_context(training_records, seed=0)
    X = assemble_features(training_records, context)
    y = np.array([int(r.severity) for r in training_records])
    return context, X, y


@pytest.fixture(scope="session")
def small_model(feature_setup, training_records):
    context, X, y = feature_setup
    cfg_d = BoosterConfig(variant=Variant.DEPTHWISE, n_estimators=25, max_depth=3,
                          learning_rate=0.2, reg_lambda=1.0, seed=1)
    cfg_l = BoosterConfig(variant=Variant.LEAFWISE, n_estimators=25, max_depth=3,
                          num_leaves=8, min_child_samples=20, learning_rate=0.2,
                          reg_lambda=1.0, seed=2)
    split = 3200
    b1 = fit_depthwise(X[:split], y[:split], cfg_d)
    b2 = fit_leafwise_goss(X[:split], y[:split], cfg_l, GossConfig())
    contexts = [
        bucket_for(r.codes["WEATHER1"], r.hour_of_day, r.occurred_at.weekday())
        for r in training_records[split:]
    ]
    meta = fit_meta_weights([b1, b2], X[split:], y[split:], contexts)
    return EnsembleModel(boosters=[b1, b2], meta=meta, feature_names=list(FEATURE_NAMES))


@pytest.fixture()
def service(tmp_path, small_model, feature_setup, training_records):
    context, _, _ = feature_setup
    store = CrashStore(tmp_path / "store")
    store.insert_many(training_records[:2000])
    weather_path = tmp_path / "weather.csv"
    write_weather_fixture(weather_path, FIXED_NOW - timedelta(hours=12), 36, seed=3)
    weather = FixtureWeatherSource.from_csv(weather_path)
    clock = lambda: FIXED_NOW.timestamp()  # noqa: E731
    svc = RiskService(small_model, context, store, weather,
                      ServiceConfig(secondary_capacity=500), clock=clock)
    return svc
