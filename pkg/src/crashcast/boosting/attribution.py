"""Additive feature attribution for the tree ensemble.

Walks each tree's decision path and credits the change in cover-weighted
subtree value to the feature that split the node. Summing the credits plus
the base value reproduces the explained margin exactly (telescoping), which
is the local-accuracy property the serving layer relies on.

``brute_force_shapley`` is the exact-but-exponential reference used to
bound how far path attribution sits from true Shapley values on small
trees; it is test/diagnostic machinery, not a serving path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .booster import FittedBooster
from .ensemble import ContextBucket, EnsembleModel
from .tree import Tree


class TooManyFeatures(ValueError):
    """Exact Shapley enumeration requested over too many features."""


@dataclass
class AttributionResult:
    base_value: float
    contributions: np.ndarray
    grouped: dict[str, float]

    @property
    def total(self) -> float:
        return self.base_value + float(self.contributions.sum())


def tree_path_attribution(tree: Tree, x: np.ndarray, contributions: np.ndarray, scale: float = 1.0) -> float:
    """Accumulate this tree's path credits into `contributions`;
    returns the tree's root value (its share of the base)."""
    node = 0
    values = tree.node_value
    while tree.feature[node] >= 0:
        f = tree.feature[node]
        xv = x[f]
        nxt = tree.right[node] if xv > tree.threshold[node] else tree.left[node]
        contributions[f] += scale * (values[nxt] - values[node])
        node = nxt
    return float(values[0])


def attribute_booster(booster: FittedBooster, x: np.ndarray, cls: int,
                      contributions: np.ndarray, scale: float = 1.0) -> float:
    """Path-attribute every class-`cls` tree; returns the scaled base part.

    Vectorized across the class's stacked trees: each pass advances every
    tree still at an internal node one level, crediting the change in
    subtree value to that node's split feature.
    """
    s = booster.stacked_for_class(cls)
    if s.roots.shape[0] == 0:
        return scale * float(booster.base_score[cls])
    cur = s.roots.copy()
    active = s.feature[cur] >= 0
    while active.any():
        nodes = cur[active]
        f = s.feature[nodes]
        go_left = ~(x[f] > s.threshold[nodes])
        nxt = np.where(go_left, s.left[nodes], s.right[nodes])
        np.add.at(contributions, f, scale * (s.node_value[nxt] - s.node_value[nodes]))
        cur[active] = nxt
        active = s.feature[cur] >= 0
    base = float(booster.base_score[cls]) + float(s.node_value[s.roots].sum())
    return scale * base


def attribute_prediction(
    model: EnsembleModel,
    x: np.ndarray,
    cls: int,
    context: Optional[ContextBucket] = None,
    groups: Optional[Mapping[str, Sequence[int]]] = None,
) -> AttributionResult:
    """Explain the ensemble margin for class `cls` at input x.

    The explained quantity is the meta-weighted sum of booster margins;
    base_value + sum(contributions) equals it exactly.
    """
    x = np.asarray(x, dtype=float)
    contributions = np.zeros(x.shape[0])
    weights = model.meta.weights_for(context)
    base = 0.0
    for w, booster in zip(weights, model.boosters):
        base += attribute_booster(booster, x, cls, contributions, scale=float(w))
    grouped = {}
    if groups:
        for name, idxs in groups.items():
            grouped[name] = float(sum(contributions[i] for i in idxs))
    return AttributionResult(base_value=base, contributions=contributions, grouped=grouped)


def grouped_factor_shares(contributions: np.ndarray, groups: Mapping[str, Sequence[int]]) -> dict[str, float]:
    """Nonnegative per-group shares of absolute attribution mass, summing to 1."""
    masses = {name: float(sum(abs(contributions[i]) for i in idxs)) for name, idxs in groups.items()}
    total = sum(masses.values())
    if total <= 0:
        return {name: 1.0 / len(masses) for name in masses}
    return {name: m / total for name, m in masses.items()}


def brute_force_shapley(
    predict_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    background: np.ndarray,
    max_features: int = 10,
) -> np.ndarray:
    """Exact Shapley values by subset enumeration with background replacement.

    f(S) = mean over background rows of predict(z) with z taking x's values
    on S and the background row's elsewhere. Exponential in the number of
    features; refuses more than `max_features`.
    """
    x = np.asarray(x, dtype=float)
    background = np.atleast_2d(np.asarray(background, dtype=float))
    d = x.shape[0]
    if d > max_features:
        raise TooManyFeatures(f"{d} features exceeds the enumeration cap {max_features}")

    f_cache = np.zeros(1 << d)
    for mask in range(1 << d):
        z = background.copy()
        for i in range(d):
            if mask & (1 << i):
                z[:, i] = x[i]
        f_cache[mask] = float(np.mean(predict_fn(z)))

    fact = [math.factorial(k) for k in range(d + 1)]
    phi = np.zeros(d)
    others = list(range(d))
    for i in range(d):
        rest = [j for j in others if j != i]
        for size in range(d):
            weight = fact[size] * fact[d - size - 1] / fact[d]
            for subset in combinations(rest, size):
                mask = 0
                for j in subset:
                    mask |= 1 << j
                phi[i] += weight * (f_cache[mask | (1 << i)] - f_cache[mask])
    return phi
