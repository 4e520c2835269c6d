"""Gradient-based one-side sampling with rarity-aware ranking.

Plain GOSS keeps the largest-|gradient| rows and reweights a uniform
subsample of the rest so gradient sums stay unbiased. Here the ranking
score is |g| * (N / N_class)^gamma, so rows from rare severity classes
outrank equal-gradient rows from common ones and keep their sampling
priority even late in training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class GossConfig:
    a_top: float = 0.2
    b_rest: float = 0.1
    severity_weight_exponent: float = 0.5

    def __post_init__(self) -> None:
        if not (self.a_top > 0 and self.b_rest > 0):
            raise ValueError("a_top and b_rest must be positive")
        # a_top = 1 keeps everything; b_rest is then irrelevant (b -> 0 limit)
        if self.a_top < 1.0 and self.a_top + self.b_rest > 1.0 + 1e-12:
            raise ValueError("a_top + b_rest must be <= 1")


def rarity_scores(grad_magnitude: np.ndarray, severities: np.ndarray, exponent: float) -> np.ndarray:
    """Ranking score |g| * (N / N_class)^exponent for each row."""
    n = severities.shape[0]
    counts = np.bincount(severities, minlength=int(severities.max()) + 1 if n else 1)
    class_count = counts[severities].astype(float)
    return grad_magnitude * (n / class_count) ** exponent


def goss_sample(
    gradients: np.ndarray,
    severities: np.ndarray,
    goss: GossConfig,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Select rows for one boosting round.

    gradients may be (n,) magnitudes or (n, k) per-class values (reduced to
    L2 norms). Returns (indices, weights): the top ceil(a*n) rows by rarity
    score carry weight 1; ceil(b*n) uniformly sampled remainder rows carry
    weight (1-a)/b. Indices come back sorted ascending so downstream
    accumulation order does not depend on the ranking order; with a_top >= 1
    the result is exactly all rows at weight 1.
    """
    g = np.asarray(gradients, dtype=float)
    if g.ndim == 2:
        g = np.sqrt((g * g).sum(axis=1))
    n = g.shape[0]
    if n == 0:
        raise EmptyInput("no rows to sample")
    n_top = min(n, math.ceil(goss.a_top * n))
    if n_top < 1:
        raise EmptyInput(f"a_top={goss.a_top} keeps no rows of {n}")

    scores = rarity_scores(np.abs(g), np.asarray(severities, dtype=int), goss.severity_weight_exponent)
    # stable sort: equal scores keep ascending row order
    order = np.argsort(-scores, kind="stable")
    top = order[:n_top]
    rest = order[n_top:]

    n_rest = min(rest.shape[0], math.ceil(goss.b_rest * n))
    if n_rest > 0:
        rng = np.random.default_rng(seed)
        sampled = rng.choice(rest, size=n_rest, replace=False)
        amplification = (1.0 - goss.a_top) / goss.b_rest
    else:
        sampled = np.empty(0, dtype=top.dtype)
        amplification = 0.0

    idx = np.concatenate([top, sampled])
    weights = np.concatenate([np.ones(n_top), np.full(n_rest, amplification)])
    order2 = np.argsort(idx, kind="stable")
    return idx[order2].astype(np.int64), weights[order2]
