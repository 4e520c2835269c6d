"""Real-time serving: caches, store, weather source, HTTP layer, load harness."""

from pathlib import Path
from typing import Optional

from .cache import CacheEntry, PrimaryCache, SecondaryCacheConfig, SecondaryLRU
from .http import HttpServer
from .loadtest import LatencyReport, LoadProfile, ServiceUnreachable, run_load_test
from .predictor import (
    BadRequest,
    RiskService,
    ServiceConfig,
    UnprocessableRequest,
    illumination_for_hour,
    road_condition_for_weather,
)
from .recommend import load_recommendation_table, recommend_actions, risk_tier
from .store import CorruptLog, CrashStore, StorageFull, record_from_dict, record_to_dict, sql_export
from .weather import FixtureWeatherSource, WeatherSourceUnavailable, write_weather_fixture


def build_service(
    model_path: str | Path,
    context_path: str | Path,
    store_dir: str | Path,
    weather_path: str | Path,
    config: Optional[ServiceConfig] = None,
    clock=None,
) -> RiskService:
    """Assemble a RiskService from artifact files on disk."""
    import time

    from ..boosting.model_io import load_model
    from ..features.assemble import load_context

    return RiskService(
        model=load_model(model_path),
        context=load_context(context_path),
        store=CrashStore(store_dir),
        weather=FixtureWeatherSource.from_csv(weather_path),
        config=config,
        clock=clock or time.time,
    )


__all__ = [
    "BadRequest",
    "CacheEntry",
    "CorruptLog",
    "CrashStore",
    "FixtureWeatherSource",
    "HttpServer",
    "LatencyReport",
    "LoadProfile",
    "PrimaryCache",
    "RiskService",
    "SecondaryCacheConfig",
    "SecondaryLRU",
    "ServiceConfig",
    "ServiceUnreachable",
    "StorageFull",
    "UnprocessableRequest",
    "WeatherSourceUnavailable",
    "build_service",
    "illumination_for_hour",
    "load_recommendation_table",
    "recommend_actions",
    "record_from_dict",
    "record_to_dict",
    "risk_tier",
    "road_condition_for_weather",
    "run_load_test",
    "sql_export",
    "write_weather_fixture",
]
