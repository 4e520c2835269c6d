import json

import numpy as np
import pytest
from click.testing import CliRunner

from crashcast.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One generate -> validate -> featurize -> train chain shared by tests."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()

    r = runner.invoke(main, ["generate", "--n", "1200", "--seed", "5", "--preset", "training",
                             "--out", str(root / "crashes.csv")])
    assert r.exit_code == 0, r.output

    r = runner.invoke(main, ["validate", "--in", str(root / "crashes.csv"),
                             "--report", str(root / "validation.json"),
                             "--out", str(root / "clean.csv")])
    assert r.exit_code == 0, r.output

    r = runner.invoke(main, ["featurize", "--in", str(root / "clean.csv"),
                             "--context-out", str(root / "context.json"),
                             "--features-out", str(root / "features.csv"),
                             "--seed", "1"])
    assert r.exit_code == 0, r.output

    r = runner.invoke(main, ["train", "--features", str(root / "features.csv"),
                             "--variant", "ensemble", "--out", str(root / "model.json"),
                             "--seed", "2"])
    assert r.exit_code == 0, r.output
    return root


def test_generate_is_deterministic(tmp_path):
    runner = CliRunner()
    for name in ("a.csv", "b.csv"):
        r = runner.invoke(main, ["generate", "--n", "200", "--seed", "9",
                                 "--out", str(tmp_path / name)])
        assert r.exit_code == 0, r.output
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_validation_report_fields(workdir):
    doc = json.loads((workdir / "validation.json").read_text())
    assert {"input_count", "retained_count", "rejection_reasons", "retention_rate"} <= set(doc)
    assert doc["input_count"] == 1200


def test_impute_round(workdir, tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["generate", "--n", "300", "--seed", "6", "--missing", "0.1",
                             "--out", str(tmp_path / "gappy.csv")])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["impute", "--in", str(tmp_path / "gappy.csv"),
                             "--out", str(tmp_path / "filled.csv"),
                             "--eval-mask", "0.1", "--seed", "3",
                             "--report", str(tmp_path / "imp.json")])
    assert r.exit_code == 0, r.output
    doc = json.loads((tmp_path / "imp.json").read_text())
    assert {"categorical_accuracy", "numeric_mae", "masked_fraction"} <= set(doc)

    from crashcast.pipeline import ingest_csv

    filled, errors = ingest_csv(tmp_path / "filled.csv")
    assert errors == []
    assert all(v is not None for r in filled for v in r.flags.values())


def test_resample_cli(workdir, tmp_path):
    from crashcast.features.io import read_features_csv

    _, y, _ = read_features_csv(workdir / "features.csv")
    counts = {int(c): int(n) for c, n in zip(*np.unique(y, return_counts=True))}
    under = {0: min(counts[0], 300)}
    over = {3: counts.get(3, 10) + 50}
    runner = CliRunner()
    r = runner.invoke(main, [
        "resample", "--in", str(workdir / "features.csv"),
        "--under", json.dumps({str(k): v for k, v in under.items()}),
        "--over", json.dumps({str(k): v for k, v in over.items()}),
        "--seed", "4", "--out", str(tmp_path / "balanced.csv"),
        "--report", str(tmp_path / "resample.json")])
    assert r.exit_code == 0, r.output
    doc = json.loads((tmp_path / "resample.json").read_text())
    assert doc["after"]["0"] == under[0]
    assert doc["after"]["3"] == over[3]


def test_model_file_exists_and_loads(workdir):
    from crashcast.boosting import load_model

    model = load_model(workdir / "model.json")
    assert len(model.boosters) == 2
    assert model.feature_names[0] == "impairment_risk"


def test_evaluate_cli(workdir, tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["evaluate", "--model", str(workdir / "model.json"),
                             "--data", str(workdir / "features.csv"),
                             "--folds", "3", "--mode", "random", "--seed", "1",
                             "--report", str(tmp_path / "eval.json")])
    assert r.exit_code == 0, r.output
    doc = json.loads((tmp_path / "eval.json").read_text())
    assert len(doc["folds"]) == 3
    assert "accuracy" in doc["mean"]
    assert len(doc["full_data_confusion"]) == 4


def test_tune_cli(workdir, tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["tune", "--variant", "depthwise", "--budget", "3",
                             "--seed", "1", "--train", str(workdir / "features.csv"),
                             "--rounds", "5",
                             "--history", str(tmp_path / "history.json"),
                             "--out", str(tmp_path / "tuned.json")])
    assert r.exit_code == 0, r.output
    history = json.loads((tmp_path / "history.json").read_text())
    assert len(history) == 3
    best = [row["best_so_far"] for row in history]
    assert best == sorted(best)


def test_weather_fixture_cli(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["weather-fixture", "--out", str(tmp_path / "w.csv"),
                             "--start", "2023-06-15T00:00:00+00:00", "--hours", "12"])
    assert r.exit_code == 0, r.output
    text = (tmp_path / "w.csv").read_text()
    assert text.startswith("OBSERVED_AT,WEATHER1")
