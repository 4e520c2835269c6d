"""Context-conditioned combination of the two boosters.

A meta-weight table keeps exponentially decayed accuracy per booster for
every (weather category, 4-hour bin, weekend) bucket; prediction mixes the
boosters' class probabilities with the bucket's weights (squared-accuracy
normalization), falling back to global weights for thin buckets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .booster import FittedBooster

HOUR_BIN_WIDTH = 4
N_HOUR_BINS = 6


class UnfittedModel(RuntimeError):
    """Prediction requested before a model was fitted or loaded."""


@dataclass(frozen=True)
class ContextBucket:
    weather_category: str  # "1".."6"
    hour_bin: int  # 0..5
    weekend: bool

    def __post_init__(self) -> None:
        if not 0 <= self.hour_bin < N_HOUR_BINS:
            raise ValueError(f"hour_bin out of range: {self.hour_bin}")


def bucket_for(weather_category: str, hour_of_day: int, weekday: int) -> ContextBucket:
    """weekday follows datetime.weekday(): 0=Monday .. 6=Sunday."""
    return ContextBucket(weather_category, hour_of_day // HOUR_BIN_WIDTH, weekday >= 5)


@dataclass
class _BucketStats:
    correct: list[float]
    seen: list[float]
    raw_count: int = 0

    @classmethod
    def empty(cls, n_boosters: int) -> "_BucketStats":
        return cls(correct=[0.0] * n_boosters, seen=[0.0] * n_boosters)

    def update(self, hits: Sequence[bool], decay: float) -> None:
        for m, hit in enumerate(hits):
            self.correct[m] = decay * self.correct[m] + (1.0 if hit else 0.0)
            self.seen[m] = decay * self.seen[m] + 1.0
        self.raw_count += 1

    def accuracy(self) -> np.ndarray:
        acc = np.zeros(len(self.correct))
        for m in range(len(self.correct)):
            if self.seen[m] > 0:
                acc[m] = self.correct[m] / self.seen[m]
        return acc


def _normalize_squared(acc: np.ndarray) -> np.ndarray:
    sq = acc * acc
    total = sq.sum()
    if total <= 0:
        return np.full(acc.shape[0], 1.0 / acc.shape[0])
    return sq / total


@dataclass
class MetaWeights:
    n_boosters: int
    decay: float = 0.98
    min_bucket_count: int = 50
    buckets: dict = field(default_factory=dict)
    global_stats: _BucketStats = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.global_stats is None:
            self.global_stats = _BucketStats.empty(self.n_boosters)

    def update(self, bucket: ContextBucket, hits: Sequence[bool]) -> None:
        stats = self.buckets.get(bucket)
        if stats is None:
            stats = _BucketStats.empty(self.n_boosters)
            self.buckets[bucket] = stats
        stats.update(hits, self.decay)
        self.global_stats.update(hits, self.decay)

    def global_weights(self) -> np.ndarray:
        if self.global_stats.raw_count == 0:
            return np.full(self.n_boosters, 1.0 / self.n_boosters)
        return _normalize_squared(self.global_stats.accuracy())

    def weights_for(self, bucket: Optional[ContextBucket]) -> np.ndarray:
        """Probability vector over boosters for this context."""
        if bucket is not None:
            stats = self.buckets.get(bucket)
            if stats is not None and stats.raw_count >= self.min_bucket_count:
                return _normalize_squared(stats.accuracy())
        return self.global_weights()


def fit_meta_weights(
    boosters: Sequence[FittedBooster],
    X_val: np.ndarray,
    y_val: np.ndarray,
    contexts: Sequence[ContextBucket],
    decay: float = 0.98,
    min_bucket_count: int = 50,
) -> MetaWeights:
    """Stream the validation set once, scoring each booster per bucket."""
    meta = MetaWeights(n_boosters=len(boosters), decay=decay, min_bucket_count=min_bucket_count)
    if len(y_val) == 0:
        return meta
    preds = [b.predict(np.asarray(X_val, dtype=float)) for b in boosters]
    y = np.asarray(y_val, dtype=int)
    for i, bucket in enumerate(contexts):
        meta.update(bucket, [bool(p[i] == y[i]) for p in preds])
    return meta


@dataclass
class EnsembleModel:
    boosters: list[FittedBooster]
    meta: MetaWeights
    feature_names: list[str]
    n_classes: int = 4

    def __post_init__(self) -> None:
        if not self.boosters:
            raise UnfittedModel("ensemble has no fitted boosters")

    @property
    def node_count(self) -> int:
        return sum(b.node_count for b in self.boosters)

    def booster_margins_one(self, x: np.ndarray) -> list[np.ndarray]:
        return [b.predict_margins_one(x) for b in self.boosters]

    def ensemble_margins_one(self, x: np.ndarray, context: Optional[ContextBucket]) -> np.ndarray:
        """Weighted sum of booster margins; the quantity attribution explains."""
        w = self.meta.weights_for(context)
        margins = self.booster_margins_one(x)
        return sum(wi * m for wi, m in zip(w, margins))

    def predict_one(self, x: np.ndarray, context: Optional[ContextBucket]) -> tuple[np.ndarray, float]:
        """Per-class probabilities and confidence (max-class probability)."""
        w = self.meta.weights_for(context)
        probs = np.zeros(self.n_classes)
        for wi, booster in zip(w, self.boosters):
            m = booster.predict_margins_one(x)
            z = np.exp(m - m.max())
            probs += wi * z / z.sum()
        probs /= probs.sum()
        return probs, float(probs.max())

    def predict_proba(self, X: np.ndarray, contexts: Optional[Sequence[ContextBucket]] = None) -> np.ndarray:
        """Batch probabilities; per-row contexts optional (global weights if absent)."""
        X = np.asarray(X, dtype=float)
        per_booster = [b.predict_proba(X) for b in self.boosters]
        if contexts is None:
            w = self.meta.global_weights()
            out = sum(wi * p for wi, p in zip(w, per_booster))
        else:
            out = np.zeros((X.shape[0], self.n_classes))
            for i, bucket in enumerate(contexts):
                w = self.meta.weights_for(bucket)
                for m, p in enumerate(per_booster):
                    out[i] += w[m] * p[i]
        return out / out.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray, contexts: Optional[Sequence[ContextBucket]] = None) -> np.ndarray:
        return np.argmax(self.predict_proba(X, contexts), axis=1)


def ensemble_predict(model: EnsembleModel, x: np.ndarray, context: Optional[ContextBucket]) -> tuple[np.ndarray, float]:
    if model is None:
        raise UnfittedModel("no model loaded")
    return model.predict_one(np.asarray(x, dtype=float), context)
