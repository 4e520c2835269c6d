"""Versioned JSON serialization for the fitted ensemble.

load(save(m)) must predict identically: floats go through json's repr
round-trip, and derived node values are rebuilt from the stored arrays.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .booster import BoosterConfig, FittedBooster, Variant
from .ensemble import ContextBucket, EnsembleModel, MetaWeights, _BucketStats
from .tree import Tree

FORMAT_NAME = "crashcast-model"
FORMAT_VERSION = 1


def _tree_to_dict(tree: Tree) -> dict:
    return {
        "cls": tree.cls,
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "leaf_value": tree.leaf_value.tolist(),
        "cover": tree.cover.tolist(),
    }


def _tree_from_dict(d: dict) -> Tree:
    feature = np.asarray(d["feature"], dtype=np.int32)
    left = np.asarray(d["left"], dtype=np.int32)
    right = np.asarray(d["right"], dtype=np.int32)
    leaf_value = np.asarray(d["leaf_value"], dtype=float)
    cover = np.asarray(d["cover"], dtype=float)
    node_value = leaf_value.copy()
    for i in range(feature.shape[0] - 1, -1, -1):
        if feature[i] >= 0:
            l, r = left[i], right[i]
            node_value[i] = (cover[l] * node_value[l] + cover[r] * node_value[r]) / (cover[l] + cover[r])
    return Tree(
        feature=feature,
        threshold=np.asarray(d["threshold"], dtype=float),
        left=left,
        right=right,
        leaf_value=leaf_value,
        cover=cover,
        node_value=node_value,
        cls=int(d["cls"]),
    )


def _booster_to_dict(b: FittedBooster) -> dict:
    cfg = dict(b.config.__dict__)
    cfg["variant"] = b.config.variant.value
    return {
        "config": cfg,
        "base_score": b.base_score.tolist(),
        "n_classes": b.n_classes,
        "n_features": b.n_features,
        "trees": [_tree_to_dict(t) for t in b.trees],
    }


def _booster_from_dict(d: dict) -> FittedBooster:
    cfg = dict(d["config"])
    cfg["variant"] = Variant(cfg["variant"])
    return FittedBooster(
        config=BoosterConfig(**cfg),
        base_score=np.asarray(d["base_score"], dtype=float),
        trees=[_tree_from_dict(t) for t in d["trees"]],
        n_classes=int(d["n_classes"]),
        n_features=int(d["n_features"]),
    )


def _meta_to_dict(meta: MetaWeights) -> dict:
    def stats(s: _BucketStats) -> dict:
        return {"correct": s.correct, "seen": s.seen, "raw_count": s.raw_count}

    return {
        "n_boosters": meta.n_boosters,
        "decay": meta.decay,
        "min_bucket_count": meta.min_bucket_count,
        "global": stats(meta.global_stats),
        "buckets": [
            {
                "weather_category": b.weather_category,
                "hour_bin": b.hour_bin,
                "weekend": b.weekend,
                "stats": stats(s),
            }
            for b, s in sorted(
                meta.buckets.items(),
                key=lambda kv: (kv[0].weather_category, kv[0].hour_bin, kv[0].weekend),
            )
        ],
    }


def _meta_from_dict(d: dict) -> MetaWeights:
    def stats(sd: dict) -> _BucketStats:
        return _BucketStats(correct=list(sd["correct"]), seen=list(sd["seen"]), raw_count=int(sd["raw_count"]))

    meta = MetaWeights(
        n_boosters=int(d["n_boosters"]),
        decay=float(d["decay"]),
        min_bucket_count=int(d["min_bucket_count"]),
        global_stats=stats(d["global"]),
    )
    for bd in d["buckets"]:
        bucket = ContextBucket(bd["weather_category"], int(bd["hour_bin"]), bool(bd["weekend"]))
        meta.buckets[bucket] = stats(bd["stats"])
    return meta


def model_to_dict(model: EnsembleModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "feature_names": list(model.feature_names),
        "n_classes": model.n_classes,
        "boosters": [_booster_to_dict(b) for b in model.boosters],
        "meta": _meta_to_dict(model.meta),
    }


def model_from_dict(d: dict) -> EnsembleModel:
    if d.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} document")
    if int(d.get("version", -1)) > FORMAT_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')}")
    return EnsembleModel(
        boosters=[_booster_from_dict(b) for b in d["boosters"]],
        meta=_meta_from_dict(d["meta"]),
        feature_names=list(d["feature_names"]),
        n_classes=int(d["n_classes"]),
    )


def save_model(model: EnsembleModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)))


def load_model(path: str | Path) -> EnsembleModel:
    return model_from_dict(json.loads(Path(path).read_text()))
