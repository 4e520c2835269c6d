from datetime import timedelta

import pytest

from crashcast.service import FixtureWeatherSource, WeatherSourceUnavailable, write_weather_fixture

from conftest import FIXED_NOW


def test_fixture_roundtrip(tmp_path):
    path = tmp_path / "weather.csv"
    write_weather_fixture(path, FIXED_NOW - timedelta(hours=6), 12, seed=1)
    source = FixtureWeatherSource.from_csv(path)
    snap = source.at(FIXED_NOW)
    assert snap is not None
    assert snap.observed_at <= FIXED_NOW
    assert snap.category in {"1", "2", "3", "4", "5", "6"}


def test_latest_at_or_before():
    import csv

    def build(tmp, times):
        path = tmp / "w.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["OBSERVED_AT", "WEATHER1", "TEMPERATURE_C",
                             "PRECIPITATION_MM_HR", "VISIBILITY_KM", "WIND_KMH"])
            for i, t in enumerate(times):
                writer.writerow([t.isoformat(), str(1 + i % 6), "10", "0", "10", "5"])
        return FixtureWeatherSource.from_csv(path)

    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as td:
        times = [FIXED_NOW - timedelta(hours=h) for h in (6, 4, 2)]
        source = build(Path(td), times)
        snap = source.at(FIXED_NOW)
        assert snap.observed_at == FIXED_NOW - timedelta(hours=2)
        snap = source.at(FIXED_NOW - timedelta(hours=3))
        assert snap.observed_at == FIXED_NOW - timedelta(hours=4)


def test_window_expiry(tmp_path):
    path = tmp_path / "weather.csv"
    write_weather_fixture(path, FIXED_NOW - timedelta(hours=30), 4, seed=2)
    source = FixtureWeatherSource.from_csv(path, window_hours=24.0)
    assert source.at(FIXED_NOW) is None
    with pytest.raises(WeatherSourceUnavailable):
        source.require_at(FIXED_NOW)


def test_before_first_observation(tmp_path):
    path = tmp_path / "weather.csv"
    write_weather_fixture(path, FIXED_NOW, 4, seed=3)
    source = FixtureWeatherSource.from_csv(path)
    assert source.at(FIXED_NOW - timedelta(hours=1)) is None
