"""Metrics, cross-validation with geographic hold-out, and drift monitoring."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .cells import cell_of
from .core import GeoPoint

N_CLASSES = 4


class LengthMismatch(ValueError):
    pass


class EmptyMatrix(ValueError):
    pass


class SingleClassInput(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, cols = predicted

    @classmethod
    def from_labels(cls, y_true: Sequence[int], y_pred: Sequence[int],
                    n_classes: int = N_CLASSES) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=int)
        y_pred = np.asarray(y_pred, dtype=int)
        if y_true.shape[0] != y_pred.shape[0]:
            raise LengthMismatch(f"{y_true.shape[0]} true vs {y_pred.shape[0]} predicted")
        counts = np.zeros((n_classes, n_classes), dtype=int)
        np.add.at(counts, (y_true, y_pred), 1)
        return cls(counts=counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int],
                     n_classes: int = N_CLASSES) -> ConfusionMatrix:
    return ConfusionMatrix.from_labels(y_true, y_pred, n_classes)


@dataclass
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class_precision: list[float]
    per_class_recall: list[float]
    per_class_f1: list[float]
    roc_auc_ovr: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class_precision": self.per_class_precision,
            "per_class_recall": self.per_class_recall,
            "per_class_f1": self.per_class_f1,
            "roc_auc_ovr": self.roc_auc_ovr,
        }


def classification_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy plus macro precision/recall/F1 with the 0/0 -> 0 convention."""
    counts = cm.counts
    total = counts.sum()
    if total == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    k = counts.shape[0]
    precision, recall, f1 = [], [], []
    for c in range(k):
        tp = counts[c, c]
        col = counts[:, c].sum()
        row = counts[c, :].sum()
        p = tp / col if col else 0.0
        r = tp / row if row else 0.0
        precision.append(float(p))
        recall.append(float(r))
        f1.append(float(2 * p * r / (p + r)) if (p + r) else 0.0)
    return MetricsReport(
        accuracy=float(np.trace(counts) / total),
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        per_class_precision=precision,
        per_class_recall=recall,
        per_class_f1=f1,
    )


def _auc_rank(scores: np.ndarray, positives: np.ndarray) -> float:
    """Mann-Whitney AUC with average ranks, so ties earn half credit."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.shape[0])
    sorted_scores = scores[order]
    i = 0
    while i < sorted_scores.shape[0]:
        j = i
        while j + 1 < sorted_scores.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # 1-based average rank
        i = j + 1
    n_pos = int(positives.sum())
    n_neg = positives.shape[0] - n_pos
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_auc_ovr(scores: np.ndarray, labels: Sequence[int]) -> float:
    """One-vs-rest AUC macro-averaged over the classes present in truth."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.ndim != 2:
        raise ValueError("scores must be (n_samples, n_classes)")
    present = np.unique(labels)
    if present.shape[0] < 2:
        raise SingleClassInput("need at least two classes in truth")
    aucs = []
    for c in present:
        positives = labels == c
        aucs.append(_auc_rank(scores[:, c], positives))
    return float(np.mean(aucs))


class FoldMode(str, Enum):
    RANDOM = "random"
    GEOGRAPHIC = "geographic"


@dataclass(frozen=True)
class FoldSpec:
    k: int = 5
    mode: FoldMode = FoldMode.RANDOM
    geo_resolution: int = 4

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("need k >= 2 folds")


def make_folds(
    y: np.ndarray,
    spec: FoldSpec,
    seed: int = 0,
    locations: Optional[Sequence[GeoPoint]] = None,
) -> list[np.ndarray]:
    """Index partitions. RANDOM stratifies by class; GEOGRAPHIC assigns whole
    spatial cells to folds (largest cells first onto the lightest fold)."""
    n = y.shape[0]
    if n < spec.k:
        raise InsufficientData(f"{n} samples cannot fill {spec.k} folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(spec.k)]

    if spec.mode is FoldMode.RANDOM:
        for cls in np.unique(y):
            rows = np.flatnonzero(y == cls)
            rng.shuffle(rows)
            for i, row in enumerate(rows):
                folds[i % spec.k].append(int(row))
    else:
        if locations is None:
            raise InsufficientData("geographic folds need record locations")
        by_cell: dict = {}
        for i, p in enumerate(locations):
            by_cell.setdefault(cell_of(p, spec.geo_resolution), []).append(i)
        if len(by_cell) < spec.k:
            raise InsufficientData(f"only {len(by_cell)} occupied cells for {spec.k} folds")
        sizes = [0] * spec.k
        ordered = sorted(by_cell.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        for _, rows in ordered:
            target = min(range(spec.k), key=lambda f: sizes[f])
            folds[target].extend(rows)
            sizes[target] += len(rows)

    out = [np.array(sorted(f), dtype=int) for f in folds]
    if any(f.shape[0] == 0 for f in out):
        raise InsufficientData("a fold came out empty")
    return out


@dataclass
class CVResult:
    folds: list[MetricsReport]
    mean: dict[str, float]
    std: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean,
            "std": self.std,
        }


_CV_FIELDS = ("accuracy", "macro_precision", "macro_recall", "macro_f1", "roc_auc_ovr")


def kfold_cv(
    X: np.ndarray,
    y: np.ndarray,
    train_fn: Callable,
    spec: FoldSpec = FoldSpec(),
    seed: int = 0,
    locations: Optional[Sequence[GeoPoint]] = None,
) -> CVResult:
    """k-fold cross-validation; mean and sample std (ddof=1) over folds.

    `train_fn(X_train, y_train, fold_seed)` returns a predictor exposing
    predict(X) and, when available, predict_proba(X) for the AUC figure.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    folds = make_folds(y, spec, seed=seed, locations=locations)
    reports: list[MetricsReport] = []
    for fold_idx, test_idx in enumerate(folds):
        mask = np.ones(y.shape[0], dtype=bool)
        mask[test_idx] = False
        model = train_fn(X[mask], y[mask], seed + fold_idx)
        pred = np.asarray(model.predict(X[test_idx]), dtype=int)
        report = classification_metrics(confusion_matrix(y[test_idx], pred))
        if hasattr(model, "predict_proba") and np.unique(y[test_idx]).shape[0] >= 2:
            report.roc_auc_ovr = roc_auc_ovr(model.predict_proba(X[test_idx]), y[test_idx])
        reports.append(report)

    mean, std = {}, {}
    for name in _CV_FIELDS:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if not values:
            continue
        mean[name] = float(np.mean(values))
        std[name] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return CVResult(folds=reports, mean=mean, std=std)


@dataclass
class DriftMonitorState:
    window_size: int = 1000
    baseline_accuracy: float = 0.9
    baseline_sigma: float = 0.01
    k_sigma: float = 3.0
    window: deque = field(default_factory=deque)
    alert: bool = False

    def windowed_accuracy(self) -> float:
        if not self.window:
            return 1.0
        return sum(1 for p, o in self.window if p == o) / len(self.window)

    def to_dict(self) -> dict:
        return {
            "window_size": self.window_size,
            "window_fill": len(self.window),
            "baseline_accuracy": self.baseline_accuracy,
            "baseline_sigma": self.baseline_sigma,
            "windowed_accuracy": self.windowed_accuracy(),
            "alert": self.alert,
        }


def drift_update(state: DriftMonitorState, prediction: int, outcome: int) -> DriftMonitorState:
    """Push one (prediction, outcome) pair; the alert only arms on a full
    window, firing when windowed accuracy sinks k_sigma below baseline."""
    state.window.append((prediction, outcome))
    while len(state.window) > state.window_size:
        state.window.popleft()
    if len(state.window) == state.window_size:
        threshold = state.baseline_accuracy - state.k_sigma * state.baseline_sigma
        state.alert = state.windowed_accuracy() < threshold
    else:
        state.alert = False
    return state
