"""Two-stage class rebalancing: controlled under-sampling of over-target
classes, then synthetic minority oversampling along segments between
same-class nearest neighbors. Targets are hit exactly and originals are
never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class TargetExceedsCount(ValueError):
    pass


class TooFewSamplesForK(ValueError):
    pass


@dataclass
class ResampleReport:
    before: dict[int, int]
    after: dict[int, int]
    synthetic_count: dict[int, int]
    seed: int

    def to_dict(self) -> dict:
        return {
            "before": {str(k): v for k, v in sorted(self.before.items())},
            "after": {str(k): v for k, v in sorted(self.after.items())},
            "synthetic_count": {str(k): v for k, v in sorted(self.synthetic_count.items())},
            "seed": self.seed,
        }


def _class_counts(y: np.ndarray) -> dict[int, int]:
    values, counts = np.unique(y, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def random_undersample(
    X: np.ndarray,
    y: np.ndarray,
    strategy: dict[int, int],
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform without-replacement subsample of each listed class down to its
    target; unlisted classes pass through untouched. Row order is preserved."""
    X = np.asarray(X)
    y = np.asarray(y, dtype=int)
    counts = _class_counts(y)
    for cls, target in strategy.items():
        have = counts.get(cls, 0)
        if target > have:
            raise TargetExceedsCount(f"class {cls}: target {target} exceeds count {have}")

    rng = np.random.default_rng(seed)
    keep = np.ones(y.shape[0], dtype=bool)
    for cls in sorted(strategy):
        target = strategy[cls]
        rows = np.flatnonzero(y == cls)
        if target == rows.shape[0]:
            continue
        chosen = rng.choice(rows, size=target, replace=False)
        keep[rows] = False
        keep[chosen] = True
    return X[keep], y[keep]


def _knn_same_class(Xc: np.ndarray, parents: np.ndarray, k: int) -> np.ndarray:
    """k nearest same-class neighbor indices (excluding self) per parent row."""
    out = np.empty((parents.shape[0], k), dtype=np.int64)
    chunk = max(1, int(2e7 / max(Xc.shape[0], 1)))
    for start in range(0, parents.shape[0], chunk):
        block = parents[start:start + chunk]
        d = ((Xc[block][:, None, :] - Xc[None, :, :]) ** 2).sum(axis=2)
        d[np.arange(block.shape[0]), block] = np.inf
        # ties resolved toward the lower index via a stable full sort
        order = np.argsort(d, axis=1, kind="stable")
        out[start:start + chunk] = order[:, :k]
    return out


def smote_oversample(
    X: np.ndarray,
    y: np.ndarray,
    strategy: dict[int, int],
    k: int = 5,
    seed: int = 0,
    return_parents: bool = False,
):
    """Grow each listed class to its target with synthetic points.

    Each synthetic draws a random class member x, one of its k nearest
    same-class neighbors x_n, and u ~ U(0,1), emitting x + u * (x_n - x).
    Originals come first in the output, synthetics after, grouped by class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    counts = _class_counts(y)
    rng = np.random.default_rng(seed)

    new_rows = [X]
    new_labels = [y]
    parent_pairs: list[tuple[int, int]] = []
    for cls in sorted(strategy):
        target = strategy[cls]
        have = counts.get(cls, 0)
        need = target - have
        if need <= 0:
            continue
        if have < k + 1:
            raise TooFewSamplesForK(f"class {cls}: {have} samples cannot support k={k}")
        rows = np.flatnonzero(y == cls)
        Xc = X[rows]
        parents_local = rng.integers(0, have, size=need)
        uniq = np.unique(parents_local)
        nn_map = {int(p): nn for p, nn in zip(uniq, _knn_same_class(Xc, uniq, k))}
        pick = rng.integers(0, k, size=need)
        u = rng.random(size=need)
        synth = np.empty((need, X.shape[1]))
        for i in range(need):
            p = int(parents_local[i])
            q = int(nn_map[p][pick[i]])
            synth[i] = Xc[p] + u[i] * (Xc[q] - Xc[p])
            parent_pairs.append((int(rows[p]), int(rows[q])))
        new_rows.append(synth)
        new_labels.append(np.full(need, cls, dtype=int))

    X_out = np.vstack(new_rows)
    y_out = np.concatenate(new_labels)
    if return_parents:
        return X_out, y_out, parent_pairs
    return X_out, y_out


def two_stage_balance(
    X: np.ndarray,
    y: np.ndarray,
    under: Optional[dict[int, int]] = None,
    over: Optional[dict[int, int]] = None,
    k: int = 5,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, ResampleReport]:
    """Under-sample, then oversample; the report reconciles every class."""
    y = np.asarray(y, dtype=int)
    before = _class_counts(y)
    X1, y1 = random_undersample(X, y, under or {}, seed=seed)
    X2, y2 = smote_oversample(X1, y1, over or {}, k=k, seed=seed)
    after = _class_counts(y2)
    mid = _class_counts(y1)
    synthetic = {cls: after.get(cls, 0) - mid.get(cls, 0) for cls in after}
    report = ResampleReport(before=before, after=after, synthetic_count=synthetic, seed=seed)
    return X2, y2, report
