"""Softmax loss pieces shared by both booster variants."""

from __future__ import annotations

import numpy as np


def softmax(margins: np.ndarray) -> np.ndarray:
    """Row-wise softmax, numerically stabilized."""
    z = margins - margins.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_gradients(labels: np.ndarray, margins: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample, per-class first and second order stats of multiclass log-loss.

    g = p_c - 1{y=c},  h = p_c * (1 - p_c)
    """
    p = softmax(margins)
    g = p.copy()
    g[np.arange(labels.shape[0]), labels] -= 1.0
    h = p * (1.0 - p)
    return g, h


def multiclass_log_loss(labels: np.ndarray, margins: np.ndarray) -> float:
    p = softmax(margins)
    eps = 1e-15
    return float(-np.mean(np.log(np.clip(p[np.arange(labels.shape[0]), labels], eps, 1.0))))
