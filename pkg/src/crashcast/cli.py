"""crashcast command-line interface."""

from __future__ import annotations

import json
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import click
import numpy as np

from .boosting import (
    DEPTHWISE_PRESET,
    LEAFWISE_PRESET,
    BoosterConfig,
    EnsembleModel,
    GossConfig,
    Variant,
    bucket_for,
    fit_depthwise,
    fit_leafwise_goss,
    fit_meta_weights,
    load_model,
    save_model,
)
from .evaluation import FoldMode, FoldSpec, kfold_cv
from .core import GeoPoint
from .features import assemble_features, fit_feature_context, load_context, save_context
from .features.io import read_features_csv, write_features_csv
from .hyperopt import SearchSpace, run_study
from .pipeline import (
    REFERENCE_MARGINALS,
    SyntheticConfig,
    fit_adaptive_thresholds,
    generate_synthetic,
    ingest_csv,
    masked_imputation_eval,
    plant_defects,
    plant_missing_flags,
    training_config,
    validate_batch,
    write_csv,
)
from .pipeline.impute import impute_categorical_conditional
from .service import (
    HttpServer,
    LoadProfile,
    ServiceConfig,
    build_service,
    run_load_test,
    write_weather_fixture,
)


@click.group()
def main() -> None:
    """Crash-risk prediction toolkit."""


@main.command()
@click.option("--n", "n_records", type=int, required=True, help="Number of records.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--preset", type=click.Choice(["reference", "training"]), default="reference",
              help="reference: shipped severity mix; training: planted-effect preset.")
@click.option("--defects", type=float, default=0.0, help="Fraction of corrupted records.")
@click.option("--missing", type=float, default=0.0, help="Fraction of blanked flag cells.")
def generate(n_records: int, seed: int, out_path: str, preset: str, defects: float, missing: float) -> None:
    """Generate a synthetic crash CSV."""
    if preset == "training":
        cfg = training_config(n_records, seed)
    else:
        cfg = SyntheticConfig(n_records=n_records, severity_marginals=REFERENCE_MARGINALS, seed=seed)
    records = generate_synthetic(cfg)
    if missing > 0:
        records = plant_missing_flags(records, missing, seed + 1)
    if defects > 0:
        records = plant_defects(records, defects, seed + 2)
    write_csv(records, out_path)
    click.echo(f"wrote {len(records)} records to {out_path}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), required=True)
@click.option("--k", type=float, default=3.0, help="Control-limit sigma multiplier.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Optional CSV of the retained records.")
def validate(in_path: str, report_path: str, k: float, out_path: str | None) -> None:
    """Validate a crash CSV against adaptive thresholds."""
    records, parse_errors = ingest_csv(in_path)
    thresholds = fit_adaptive_thresholds(records, k=k)
    retained, report = validate_batch(records, thresholds)
    doc = report.to_dict()
    doc["parse_errors"] = len(parse_errors)
    Path(report_path).write_text(json.dumps(doc, indent=2))
    if out_path:
        write_csv(retained, out_path)
    click.echo(f"retained {report.retained_count}/{report.input_count} "
               f"(rate {report.retention_rate:.4f}); report at {report_path}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--eval-mask", type=float, default=0.0,
              help="If > 0, run a masked-cell evaluation at this fraction first.")
@click.option("--seed", type=int, default=0)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
def impute(in_path: str, out_path: str, eval_mask: float, seed: int, report_path: str | None) -> None:
    """Fill missing categorical cells; optionally score imputation quality."""
    records, _ = ingest_csv(in_path)
    if eval_mask > 0:
        report = masked_imputation_eval(records, eval_mask, seed)
        doc = report.to_dict()
        click.echo(json.dumps(doc, indent=2))
        if report_path:
            Path(report_path).write_text(json.dumps(doc, indent=2))
    completed, _ = impute_categorical_conditional(records)
    write_csv(completed, out_path)
    click.echo(f"imputed records written to {out_path}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Validated crash CSV.")
@click.option("--context-out", type=click.Path(dir_okay=False), required=True)
@click.option("--features-out", type=click.Path(dir_okay=False), required=True)
@click.option("--cluster-eps", type=float, default=1.0)
@click.option("--seed", type=int, default=0)
def featurize(in_path: str, context_out: str, features_out: str, cluster_eps: float, seed: int) -> None:
    """Fit the feature context and write the feature matrix."""
    from .features import ClusterParams

    records, _ = ingest_csv(in_path)
    context = fit_feature_context(records, ClusterParams(eps_km=cluster_eps), seed=seed)
    save_context(context, context_out)
    X = assemble_features(records, context)
    y = np.array([int(r.severity) for r in records])
    write_features_csv(features_out, X, y, records)
    click.echo(f"context at {context_out}; features ({X.shape[0]}x{X.shape[1]}) at {features_out}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--under", "under_json", type=str, default="{}",
              help='Class targets, e.g. \'{"0": 15000}\'.')
@click.option("--over", "over_json", type=str, default="{}")
@click.option("--k", type=int, default=5)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
def resample(in_path: str, under_json: str, over_json: str, k: int, seed: int,
             out_path: str, report_path: str | None) -> None:
    """Two-stage rebalance of a features file."""
    from .resampling import two_stage_balance

    X, y, _ = read_features_csv(in_path)
    under = {int(c): int(t) for c, t in json.loads(under_json).items()}
    over = {int(c): int(t) for c, t in json.loads(over_json).items()}
    X2, y2, report = two_stage_balance(X, y, under, over, k=k, seed=seed)
    write_features_csv(out_path, X2, y2)
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2))
    click.echo(f"resampled {X.shape[0]} -> {X2.shape[0]} rows; counts {report.after}")


def _contexts_from_meta(meta: dict, rows: np.ndarray):
    out = []
    for i in rows:
        w = meta["weather"][i] or "1"
        h = int(meta["hour"][i]) if meta["hour"][i] >= 0 else 12
        wd = int(meta["weekday"][i]) if meta["weekday"][i] >= 0 else 0
        out.append(bucket_for(w, h, wd))
    return out


@main.command()
@click.option("--features", "features_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--variant", type=click.Choice(["depthwise", "leafwise", "ensemble"]), default="ensemble")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--val-fraction", type=float, default=0.2)
@click.option("--goss/--no-goss", default=True, help="One-side sampling for the leaf-wise booster.")
def train(features_path: str, variant: str, out_path: str, seed: int,
          val_fraction: float, goss: bool) -> None:
    """Train preset boosters and the meta-weight layer; write the model file."""
    X, y, meta = read_features_csv(features_path)
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.shape[0])
    n_val = max(1, int(val_fraction * X.shape[0]))
    val_rows, train_rows = order[:n_val], order[n_val:]

    boosters = []
    if variant in ("depthwise", "ensemble"):
        click.echo("fitting depth-wise booster...")
        boosters.append(fit_depthwise(X[train_rows], y[train_rows], DEPTHWISE_PRESET))
    if variant in ("leafwise", "ensemble"):
        click.echo("fitting leaf-wise booster...")
        boosters.append(fit_leafwise_goss(X[train_rows], y[train_rows], LEAFWISE_PRESET,
                                          GossConfig() if goss else None))

    contexts = _contexts_from_meta(meta, val_rows)
    meta_weights = fit_meta_weights(boosters, X[val_rows], y[val_rows], contexts)
    from .features.assemble import FEATURE_NAMES

    model = EnsembleModel(boosters=boosters, meta=meta_weights,
                          feature_names=list(FEATURE_NAMES), n_classes=4)
    save_model(model, out_path)
    acc = float(np.mean(model.predict(X[val_rows], contexts) == y[val_rows]))
    click.echo(f"model at {out_path}; validation accuracy {acc:.4f}; "
               f"global weights {np.round(model.meta.global_weights(), 3).tolist()}")


@main.command()
@click.option("--variant", type=click.Choice(["depthwise", "leafwise"]), required=True)
@click.option("--budget", type=int, default=20)
@click.option("--seed", type=int, default=0)
@click.option("--train", "train_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--history", "history_path", type=click.Path(dir_okay=False), default=None)
@click.option("--rounds", type=int, default=40, help="Boosting rounds per trial.")
def tune(variant: str, budget: int, seed: int, train_path: str,
         out_path: str | None, history_path: str | None, rounds: int) -> None:
    """Random-search the booster space, scalar accuracy - 0.1*latency."""
    X, y, _ = read_features_csv(train_path)
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.shape[0])
    n_val = max(1, int(0.25 * X.shape[0]))
    val_rows, train_rows = order[:n_val], order[n_val:]
    var = Variant(variant)
    fitted = {}

    def evaluate(params: dict, trial_seed: int):
        cfg = BoosterConfig(
            variant=var,
            n_estimators=rounds,
            max_depth=int(params["max_depth"]),
            learning_rate=float(params["learning_rate"]),
            min_child_weight=float(params["min_child_weight"]),
            subsample=float(params["subsample"]),
            colsample_bytree=float(params["colsample_bytree"]),
            reg_lambda=float(params["reg_lambda"]),
            reg_alpha=float(params["reg_alpha"]),
            seed=trial_seed % (2**31),
        )
        if var is Variant.DEPTHWISE:
            booster = fit_depthwise(X[train_rows], y[train_rows], cfg)
        else:
            booster = fit_leafwise_goss(X[train_rows], y[train_rows], cfg, GossConfig())
        accuracy = float(np.mean(booster.predict(X[val_rows]) == y[val_rows]))
        fitted[id(booster)] = booster
        return accuracy, booster.predict_margins_one, booster.node_count

    probe = X[rng.integers(0, X.shape[0], size=1000)]
    result = run_study(SearchSpace.booster_default(), budget, evaluate, seed=seed, probe=probe)
    best = result.best
    click.echo(f"best trial #{best.index}: scalar {best.scalar:.4f} "
               f"(accuracy {best.accuracy:.4f}, latency {best.latency:.4f}s/1k, "
               f"nodes {int(best.complexity)})")
    click.echo(f"pareto front size: {len(result.front)}")
    if history_path:
        Path(history_path).write_text(json.dumps(result.history_json(), indent=2))
    if out_path:
        params = dict(best.params)
        evaluate_again = evaluate(params, best.seed)
        booster = list(fitted.values())[-1]
        from .boosting.ensemble import MetaWeights
        from .features.assemble import FEATURE_NAMES

        model = EnsembleModel(boosters=[booster], meta=MetaWeights(n_boosters=1),
                              feature_names=list(FEATURE_NAMES), n_classes=4)
        save_model(model, out_path)
        click.echo(f"best model re-fit and saved to {out_path} "
                   f"(check accuracy {evaluate_again[0]:.4f})")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--folds", type=int, default=5)
@click.option("--mode", type=click.Choice(["random", "geo"]), default="random")
@click.option("--geo-resolution", type=int, default=8,
              help="Cell resolution for geographic folds (finer than the contract default so desk-scale regions fill k folds).")
@click.option("--seed", type=int, default=0)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), required=True)
def evaluate(model_path: str, data_path: str, folds: int, mode: str, geo_resolution: int, seed: int, report_path: str) -> None:
    """Cross-validate the model's configuration on a features file."""
    X, y, meta = read_features_csv(data_path)
    model = load_model(model_path)

    def train_fn(X_train, y_train, fold_seed):
        cfg = model.boosters[0].config
        if cfg.variant is Variant.DEPTHWISE:
            return fit_depthwise(X_train, y_train, cfg)
        return fit_leafwise_goss(X_train, y_train, cfg, GossConfig())

    locations = None
    if mode == "geo":
        locations = [GeoPoint(meta["lat"][i], meta["lon"][i]) for i in range(X.shape[0])]
    spec = FoldSpec(k=folds, mode=FoldMode.RANDOM if mode == "random" else FoldMode.GEOGRAPHIC,
                    geo_resolution=geo_resolution)
    result = kfold_cv(X, y, train_fn, spec, seed=seed, locations=locations)
    from .evaluation import classification_metrics, confusion_matrix

    preds = model.predict(X)
    cm = confusion_matrix(y, preds)
    doc = result.to_dict()
    doc["full_data_confusion"] = cm.counts.tolist()
    doc["full_data_metrics"] = classification_metrics(cm).to_dict()
    Path(report_path).write_text(json.dumps(doc, indent=2))
    click.echo(json.dumps({"mean": doc["mean"], "std": doc["std"]}, indent=2))


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--context", "context_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--store", "store_dir", type=click.Path(file_okay=False), required=True)
@click.option("--weather", "weather_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--port", type=int, default=8080)
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None)
@click.option("--crashes", "crashes_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Optional CSV loaded into the store before serving.")
def serve(model_path: str, context_path: str, store_dir: str, weather_path: str,
          port: int, host: str, config_path: str | None, ui_dir: str | None,
          crashes_path: str | None) -> None:
    """Run the prediction service."""
    config = ServiceConfig.from_file(config_path) if config_path else ServiceConfig()
    service = build_service(model_path, context_path, store_dir, weather_path, config)
    if crashes_path:
        records, _ = ingest_csv(crashes_path)
        service.store.insert_many(records)
        click.echo(f"loaded {len(records)} crash records into the store")
    click.echo("warming primary cache...")
    try:
        n = service.refresh_primary()
        click.echo(f"primary cache: {n} entries")
    except Exception as exc:  # noqa: BLE001
        click.echo(f"primary refresh failed ({exc}); serving cold", err=True)
    server = HttpServer(service, host=host, port=port, ui_dir=ui_dir)
    server.bind()
    click.echo(f"serving on http://{host}:{server.port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("shutting down")


@main.command()
@click.option("--url", type=str, required=True)
@click.option("--concurrency", type=int, default=256)
@click.option("--duration", type=float, default=20.0)
@click.option("--zipf", type=float, default=1.1)
@click.option("--warmup", type=float, default=2.0)
@click.option("--seed", type=int, default=0)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
def loadtest(url: str, concurrency: int, duration: float, zipf: float, warmup: float,
             seed: int, report_path: str | None) -> None:
    """Closed-loop load test against a running service."""
    profile = LoadProfile(url=url, concurrency=concurrency, duration_s=duration,
                          zipf_exponent=zipf, warmup_s=warmup, seed=seed)
    report = run_load_test(profile)
    click.echo(json.dumps(report.to_dict(), indent=2))
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2))


@main.command("weather-fixture")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--start", type=str, default=None, help="ISO start time (default: 24h ago).")
@click.option("--hours", type=int, default=48)
@click.option("--seed", type=int, default=0)
def weather_fixture(out_path: str, start: str | None, hours: int, seed: int) -> None:
    """Write a synthetic weather timeline CSV."""
    if start:
        t0 = datetime.fromisoformat(start.replace("Z", "+00:00"))
        if t0.tzinfo is None:
            t0 = t0.replace(tzinfo=timezone.utc)
    else:
        t0 = datetime.now(tz=timezone.utc) - timedelta(hours=24)
    write_weather_fixture(out_path, t0, hours, seed=seed)
    click.echo(f"weather fixture at {out_path}")


if __name__ == "__main__":
    sys.exit(main())
